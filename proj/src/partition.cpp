#include <algorithm>
#include <limits>
#include <map>
#include <numeric>

#include "sparsetile/errors.hpp"
#include "sparsetile/mesh.hpp"

namespace sparsetile {

namespace {

constexpr int kUnreached = std::numeric_limits<int>::max();

struct Incidence {
  // CSR: vertex -> incident cells, edge -> incident cells
  std::vector<Index> vc_offsets, vc_cells;
  std::vector<std::array<Index, 2>> edge_cells; // second == npos when a hull edge
  static constexpr Index npos = std::numeric_limits<Index>::max();
};

Incidence build_incidence(const Mesh& mesh) {
  Incidence inc;
  inc.vc_offsets.assign(mesh.num_vertices + 1, 0);
  for (Index v : mesh.cells_to_vertices) ++inc.vc_offsets[v + 1];
  std::partial_sum(inc.vc_offsets.begin(), inc.vc_offsets.end(), inc.vc_offsets.begin());
  inc.vc_cells.resize(inc.vc_offsets.back());
  std::vector<Index> fill(inc.vc_offsets.begin(), inc.vc_offsets.end() - 1);
  for (std::size_t c = 0; c < mesh.num_cells; ++c)
    for (int k = 0; k < 3; ++k) inc.vc_cells[fill[mesh.cells_to_vertices[3 * c + k]]++] = static_cast<Index>(c);

  std::map<std::pair<Index, Index>, Index> edge_of;
  for (std::size_t e = 0; e < mesh.num_edges; ++e) {
    Index a = mesh.edges_to_vertices[2 * e], b = mesh.edges_to_vertices[2 * e + 1];
    edge_of[{std::min(a, b), std::max(a, b)}] = static_cast<Index>(e);
  }
  inc.edge_cells.assign(mesh.num_edges, {Incidence::npos, Incidence::npos});
  for (std::size_t c = 0; c < mesh.num_cells; ++c) {
    const Index* t = &mesh.cells_to_vertices[3 * c];
    for (int k = 0; k < 3; ++k) {
      Index a = t[k], b = t[(k + 1) % 3];
      auto it = edge_of.find({std::min(a, b), std::max(a, b)});
      if (it == edge_of.end()) throw UnsupportedInput("partition: cell side missing from the edge list");
      auto& slot = inc.edge_cells[it->second];
      (slot[0] == Incidence::npos ? slot[0] : slot[1]) = static_cast<Index>(c);
    }
  }
  return inc;
}

// Distance (in strips) of every element from the cells owned by `rank`.
// Owned cells and their closure sit at level 0; strip k collects the cells
// sharing a vertex with level k-1 plus the vertices of those cells.
std::array<std::vector<int>, 3> strip_levels(const Mesh& mesh, const Incidence& inc,
                                             const std::vector<int>& cell_owner, int rank,
                                             std::size_t depth) {
  std::vector<int> cl(mesh.num_cells, kUnreached), vl(mesh.num_vertices, kUnreached),
      el(mesh.num_edges, kUnreached);
  std::vector<Index> frontier;
  for (std::size_t c = 0; c < mesh.num_cells; ++c)
    if (cell_owner[c] == rank) {
      cl[c] = 0;
      for (int k = 0; k < 3; ++k) {
        Index v = mesh.cells_to_vertices[3 * c + k];
        if (vl[v] == kUnreached) {
          vl[v] = 0;
          frontier.push_back(v);
        }
      }
    }
  for (int level = 1; level <= static_cast<int>(depth); ++level) {
    std::vector<Index> next;
    for (Index v : frontier)
      for (Index k = inc.vc_offsets[v]; k < inc.vc_offsets[v + 1]; ++k) {
        Index c = inc.vc_cells[k];
        if (cl[c] != kUnreached) continue;
        cl[c] = level;
        for (int q = 0; q < 3; ++q) {
          Index w = mesh.cells_to_vertices[3 * c + q];
          if (vl[w] == kUnreached) {
            vl[w] = level;
            next.push_back(w);
          }
        }
      }
    frontier = std::move(next);
  }
  for (std::size_t e = 0; e < mesh.num_edges; ++e)
    for (Index c : inc.edge_cells[e])
      if (c != Incidence::npos) el[e] = std::min(el[e], cl[c]);

  std::array<std::vector<int>, 3> out;
  out[static_cast<int>(MeshSpace::cells)] = std::move(cl);
  out[static_cast<int>(MeshSpace::edges)] = std::move(el);
  out[static_cast<int>(MeshSpace::vertices)] = std::move(vl);
  return out;
}

} // namespace

Ownership compute_ownership(const Mesh& mesh, int nranks) {
  if (nranks < 1) throw InvalidArgument("nranks must be >= 1");
  if (static_cast<std::size_t>(nranks) > mesh.num_cells)
    throw InvalidArgument("nranks exceeds the number of cells");
  Ownership own;
  auto& co = own.owner[static_cast<int>(MeshSpace::cells)];
  co.resize(mesh.num_cells);
  for (int r = 0; r < nranks; ++r) {
    std::size_t lo = mesh.num_cells * r / nranks, hi = mesh.num_cells * (r + 1) / nranks;
    for (std::size_t c = lo; c < hi; ++c) co[c] = r;
  }
  auto& vo = own.owner[static_cast<int>(MeshSpace::vertices)];
  vo.assign(mesh.num_vertices, kUnreached);
  for (std::size_t c = 0; c < mesh.num_cells; ++c)
    for (int k = 0; k < 3; ++k) {
      Index v = mesh.cells_to_vertices[3 * c + k];
      vo[v] = std::min(vo[v], co[c]);
    }
  if (std::find(vo.begin(), vo.end(), kUnreached) != vo.end())
    throw UnsupportedInput("partition: vertex not incident to any cell");

  const Incidence inc = build_incidence(mesh);
  auto& eo = own.owner[static_cast<int>(MeshSpace::edges)];
  eo.assign(mesh.num_edges, kUnreached);
  for (std::size_t e = 0; e < mesh.num_edges; ++e)
    for (Index c : inc.edge_cells[e])
      if (c != Incidence::npos) eo[e] = std::min(eo[e], co[c]);
  return own;
}

std::vector<LocalMesh> partition_for_ranks(const Mesh& mesh, int nranks, std::size_t depth) {
  if (depth < 1) throw InvalidArgument("depth must be >= 1");
  const Ownership own = compute_ownership(mesh, nranks);
  const Incidence inc = build_incidence(mesh);
  const auto& cell_owner = own.owner[static_cast<int>(MeshSpace::cells)];
  const int d = static_cast<int>(depth);

  std::vector<std::array<std::vector<int>, 3>> levels(nranks);
  for (int r = 0; r < nranks; ++r) levels[r] = strip_levels(mesh, inc, cell_owner, r, depth);

  std::vector<LocalMesh> locals(nranks);
  // local index of every global element, per rank and space (npos = absent)
  std::vector<std::array<std::vector<Index>, 3>> local_of(nranks);

  for (int r = 0; r < nranks; ++r) {
    LocalMesh& lm = locals[r];
    lm.rank = r;
    for (MeshSpace s : kMeshSpaces) {
      const int si = static_cast<int>(s);
      const auto& lvl = levels[r][si];
      const auto& owner = own.owner[si];
      std::array<std::vector<Index>, 4> buckets; // core, owned, exec, non_exec
      for (std::size_t x = 0; x < mesh.size(s); ++x) {
        if (lvl[x] > d) continue;
        if (owner[x] == r) {
          bool shared = false;
          for (int q = 0; q < nranks && !shared; ++q)
            shared = q != r && levels[q][si][x] <= d;
          buckets[shared ? 1 : 0].push_back(static_cast<Index>(x));
        } else {
          buckets[lvl[x] < d ? 2 : 3].push_back(static_cast<Index>(x));
        }
      }
      lm.regions[si] = {buckets[0].size(), buckets[1].size(), buckets[2].size(), buckets[3].size()};
      auto& gids = lm.global_ids[si];
      for (const auto& b : buckets) gids.insert(gids.end(), b.begin(), b.end());
      auto& lo = local_of[r][si];
      lo.assign(mesh.size(s), Incidence::npos);
      for (std::size_t k = 0; k < gids.size(); ++k) lo[gids[k]] = static_cast<Index>(k);
    }

    const auto& lo_v = local_of[r][static_cast<int>(MeshSpace::vertices)];
    for (Index c : lm.gids(MeshSpace::cells))
      for (int k = 0; k < 3; ++k) {
        Index v = lo_v[mesh.cells_to_vertices[3 * c + k]];
        if (v == Incidence::npos) throw PartitionBug("local cell references an absent vertex");
        lm.cells_to_vertices.push_back(v);
      }
    for (Index e : lm.gids(MeshSpace::edges))
      for (int k = 0; k < 2; ++k) {
        Index v = lo_v[mesh.edges_to_vertices[2 * e + k]];
        if (v == Incidence::npos) throw PartitionBug("local edge references an absent vertex");
        lm.edges_to_vertices.push_back(v);
      }
    if (!mesh.vertex_coords.empty())
      for (Index v : lm.gids(MeshSpace::vertices)) lm.vertex_coords.push_back(mesh.vertex_coords[v]);
  }

  for (int r = 0; r < nranks; ++r)
    for (int q = 0; q < nranks; ++q) {
      if (q == r) continue;
      for (MeshSpace s : kMeshSpaces) {
        const int si = static_cast<int>(s);
        const auto& owner = own.owner[si];
        std::vector<HaloPair> pairs;
        for (std::size_t x = 0; x < mesh.size(s); ++x) {
          Index here = local_of[r][si][x], there = local_of[q][si][x];
          if (here == Incidence::npos || there == Incidence::npos) continue;
          if (owner[x] == r || owner[x] == q) pairs.push_back({here, there});
        }
        if (!pairs.empty()) locals[r].exchange_table[{s, q}] = std::move(pairs);
      }
    }
  return locals;
}

} // namespace sparsetile
