#include "sparsetile/mesh.hpp"

#include <algorithm>
#include <deque>
#include <numeric>
#include <set>
#include <sstream>

#include "sparsetile/errors.hpp"

namespace sparsetile {

std::string_view space_name(MeshSpace space) {
  switch (space) {
  case MeshSpace::cells:
    return "cells";
  case MeshSpace::edges:
    return "edges";
  case MeshSpace::vertices:
    return "verts";
  }
  return "?";
}

std::size_t Mesh::size(MeshSpace space) const {
  switch (space) {
  case MeshSpace::cells:
    return num_cells;
  case MeshSpace::edges:
    return num_edges;
  case MeshSpace::vertices:
    return num_vertices;
  }
  return 0;
}

namespace {

std::pair<Index, Index> sorted_pair(Index a, Index b) { return a < b ? std::pair{a, b} : std::pair{b, a}; }

void fail(const std::string& what) { throw InvalidArgument("invalid mesh: " + what); }

} // namespace

void validate_mesh(const Mesh& mesh) {
  if (mesh.cells_to_vertices.size() != 3 * mesh.num_cells)
    fail("cells_to_vertices length is not 3 * num_cells");
  if (mesh.edges_to_vertices.size() != 2 * mesh.num_edges)
    fail("edges_to_vertices length is not 2 * num_edges");
  for (Index v : mesh.cells_to_vertices)
    if (v >= mesh.num_vertices) fail("cell references vertex out of range");
  for (Index v : mesh.edges_to_vertices)
    if (v >= mesh.num_vertices) fail("edge references vertex out of range");

  std::set<std::pair<Index, Index>> sides;
  for (std::size_t c = 0; c < mesh.num_cells; ++c) {
    const Index* t = &mesh.cells_to_vertices[3 * c];
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) fail("cell with repeated vertex");
    sides.insert(sorted_pair(t[0], t[1]));
    sides.insert(sorted_pair(t[1], t[2]));
    sides.insert(sorted_pair(t[2], t[0]));
  }
  std::set<std::pair<Index, Index>> edges;
  for (std::size_t e = 0; e < mesh.num_edges; ++e) {
    Index a = mesh.edges_to_vertices[2 * e];
    Index b = mesh.edges_to_vertices[2 * e + 1];
    if (a == b) fail("edge with repeated vertex");
    if (!edges.insert(sorted_pair(a, b)).second) fail("edge stored twice");
  }
  if (edges != sides) fail("edge set differs from the set of cell sides");
}

Mesh generate_rect_mesh(std::size_t nx, std::size_t ny) {
  if (nx == 0 || ny == 0) throw InvalidArgument("generate_rect_mesh: dimensions must be >= 1");

  Mesh mesh;
  const std::size_t row = nx + 1;
  mesh.num_vertices = row * (ny + 1);
  mesh.num_cells = 2 * nx * ny;
  mesh.vertex_coords.reserve(mesh.num_vertices);
  for (std::size_t j = 0; j <= ny; ++j)
    for (std::size_t i = 0; i <= nx; ++i)
      mesh.vertex_coords.push_back({static_cast<double>(i), static_cast<double>(j)});

  auto vid = [row](std::size_t i, std::size_t j) { return static_cast<Index>(j * row + i); };
  mesh.cells_to_vertices.reserve(3 * mesh.num_cells);
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      Index a = vid(i, j), b = vid(i + 1, j), c = vid(i + 1, j + 1), d = vid(i, j + 1);
      mesh.cells_to_vertices.insert(mesh.cells_to_vertices.end(), {a, b, c, a, c, d});
    }
  }

  std::set<std::pair<Index, Index>> seen;
  for (std::size_t c = 0; c < mesh.num_cells; ++c) {
    const Index* t = &mesh.cells_to_vertices[3 * c];
    for (int k = 0; k < 3; ++k) {
      auto side = sorted_pair(t[k], t[(k + 1) % 3]);
      if (seen.insert(side).second) {
        mesh.edges_to_vertices.push_back(side.first);
        mesh.edges_to_vertices.push_back(side.second);
      }
    }
  }
  mesh.num_edges = mesh.edges_to_vertices.size() / 2;
  return mesh;
}

MeshPermutation invert(const MeshPermutation& perm) {
  MeshPermutation inv;
  for (int s = 0; s < 3; ++s) {
    const auto& p = perm.new_of_old[s];
    auto& q = inv.new_of_old[s];
    q.assign(p.size(), 0);
    for (std::size_t i = 0; i < p.size(); ++i) q[p[i]] = static_cast<Index>(i);
  }
  return inv;
}

Mesh apply_permutation(const Mesh& mesh, const MeshPermutation& perm) {
  for (MeshSpace s : kMeshSpaces) {
    const auto& p = perm.new_of_old[static_cast<int>(s)];
    if (p.size() != mesh.size(s)) throw InvalidArgument("permutation size does not match mesh");
    std::vector<bool> hit(p.size(), false);
    for (Index x : p) {
      if (x >= p.size() || hit[x]) throw InvalidArgument("permutation is not a bijection");
      hit[x] = true;
    }
  }
  const auto& pc = perm.new_of_old[static_cast<int>(MeshSpace::cells)];
  const auto& pe = perm.new_of_old[static_cast<int>(MeshSpace::edges)];
  const auto& pv = perm.new_of_old[static_cast<int>(MeshSpace::vertices)];

  Mesh out;
  out.num_vertices = mesh.num_vertices;
  out.num_cells = mesh.num_cells;
  out.num_edges = mesh.num_edges;
  out.cells_to_vertices.resize(mesh.cells_to_vertices.size());
  out.edges_to_vertices.resize(mesh.edges_to_vertices.size());
  for (std::size_t c = 0; c < mesh.num_cells; ++c)
    for (int k = 0; k < 3; ++k)
      out.cells_to_vertices[3 * pc[c] + k] = pv[mesh.cells_to_vertices[3 * c + k]];
  for (std::size_t e = 0; e < mesh.num_edges; ++e)
    for (int k = 0; k < 2; ++k)
      out.edges_to_vertices[2 * pe[e] + k] = pv[mesh.edges_to_vertices[2 * e + k]];
  if (!mesh.vertex_coords.empty()) {
    out.vertex_coords.resize(mesh.vertex_coords.size());
    for (std::size_t v = 0; v < mesh.num_vertices; ++v) out.vertex_coords[pv[v]] = mesh.vertex_coords[v];
  }
  return out;
}

namespace {

std::vector<std::vector<Index>> bfs_levels(Index root, const std::vector<Index>& offsets,
                                           const std::vector<Index>& adjacency,
                                           std::vector<int>& mark, int stamp) {
  std::vector<std::vector<Index>> levels{{root}};
  mark[root] = stamp;
  while (true) {
    std::vector<Index> next;
    for (Index v : levels.back())
      for (Index k = offsets[v]; k < offsets[v + 1]; ++k) {
        Index w = adjacency[k];
        if (mark[w] != stamp) {
          mark[w] = stamp;
          next.push_back(w);
        }
      }
    if (next.empty()) break;
    levels.push_back(std::move(next));
  }
  return levels;
}

// CSR vertex graph from the edge list (edges are exactly the cell sides).
void vertex_graph(const Mesh& mesh, std::vector<Index>& offsets, std::vector<Index>& adjacency) {
  offsets.assign(mesh.num_vertices + 1, 0);
  for (Index v : mesh.edges_to_vertices) ++offsets[v + 1];
  std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
  adjacency.assign(offsets.back(), 0);
  std::vector<Index> fill(offsets.begin(), offsets.end() - 1);
  for (std::size_t e = 0; e < mesh.num_edges; ++e) {
    Index a = mesh.edges_to_vertices[2 * e], b = mesh.edges_to_vertices[2 * e + 1];
    adjacency[fill[a]++] = b;
    adjacency[fill[b]++] = a;
  }
  for (std::size_t v = 0; v < mesh.num_vertices; ++v)
    std::sort(adjacency.begin() + offsets[v], adjacency.begin() + offsets[v + 1]);
}

} // namespace

std::vector<Index> rcm_ordering(const std::vector<Index>& offsets, const std::vector<Index>& adjacency) {
  const std::size_t n = offsets.empty() ? 0 : offsets.size() - 1;
  if (n == 0) return {};
  auto degree = [&](Index v) { return offsets[v + 1] - offsets[v]; };
  std::vector<int> mark(n, -1);
  int stamp = 0;

  // George-Liu pseudo-peripheral search; the start is the last min-degree
  // vertex found on the deepest level.
  Index root = 0;
  auto levels = bfs_levels(root, offsets, adjacency, mark, stamp++);
  std::size_t reached = 0;
  for (const auto& l : levels) reached += l.size();
  if (reached != n) throw UnsupportedInput("rcm: graph is disconnected");
  Index start = root;
  while (true) {
    const auto& last = levels.back();
    Index x = *std::min_element(last.begin(), last.end(), [&](Index a, Index b) {
      return degree(a) != degree(b) ? degree(a) < degree(b) : a < b;
    });
    auto lx = bfs_levels(x, offsets, adjacency, mark, stamp++);
    start = x;
    if (lx.size() <= levels.size()) break;
    levels = std::move(lx);
  }

  std::vector<Index> order;
  order.reserve(n);
  std::vector<bool> placed(n, false);
  std::deque<Index> queue{start};
  placed[start] = true;
  std::vector<Index> nbrs;
  while (!queue.empty()) {
    Index v = queue.front();
    queue.pop_front();
    order.push_back(v);
    nbrs.clear();
    for (Index k = offsets[v]; k < offsets[v + 1]; ++k)
      if (!placed[adjacency[k]]) nbrs.push_back(adjacency[k]);
    std::sort(nbrs.begin(), nbrs.end(), [&](Index a, Index b) {
      return degree(a) != degree(b) ? degree(a) < degree(b) : a < b;
    });
    for (Index w : nbrs) {
      placed[w] = true;
      queue.push_back(w);
    }
  }
  std::reverse(order.begin(), order.end());
  return order;
}

std::size_t vertex_bandwidth(const Mesh& mesh) {
  std::size_t bw = 0;
  for (std::size_t e = 0; e < mesh.num_edges; ++e) {
    Index a = mesh.edges_to_vertices[2 * e], b = mesh.edges_to_vertices[2 * e + 1];
    bw = std::max<std::size_t>(bw, a > b ? a - b : b - a);
  }
  return bw;
}

namespace {

template <std::size_t Arity>
std::vector<Index> order_by_vertices(const std::vector<Index>& conn, const std::vector<Index>& pv) {
  const std::size_t n = conn.size() / Arity;
  std::vector<std::array<Index, Arity>> keys(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < Arity; ++k) keys[i][k] = pv[conn[Arity * i + k]];
    std::sort(keys[i].begin(), keys[i].end());
  }
  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return keys[a] < keys[b]; });
  std::vector<Index> new_of_old(n);
  for (std::size_t k = 0; k < n; ++k) new_of_old[order[k]] = static_cast<Index>(k);
  return new_of_old;
}

} // namespace

MeshPermutation rcm_permutation(const Mesh& mesh) {
  std::vector<Index> offsets, adjacency;
  vertex_graph(mesh, offsets, adjacency);
  auto order = rcm_ordering(offsets, adjacency);

  MeshPermutation perm;
  auto& pv = perm.new_of_old[static_cast<int>(MeshSpace::vertices)];
  pv.resize(mesh.num_vertices);
  for (std::size_t k = 0; k < order.size(); ++k) pv[order[k]] = static_cast<Index>(k);

  std::size_t bw_after = 0;
  for (std::size_t e = 0; e < mesh.num_edges; ++e) {
    Index a = pv[mesh.edges_to_vertices[2 * e]], b = pv[mesh.edges_to_vertices[2 * e + 1]];
    bw_after = std::max<std::size_t>(bw_after, a > b ? a - b : b - a);
  }
  if (bw_after > vertex_bandwidth(mesh)) std::iota(pv.begin(), pv.end(), 0);

  perm.new_of_old[static_cast<int>(MeshSpace::cells)] = order_by_vertices<3>(mesh.cells_to_vertices, pv);
  perm.new_of_old[static_cast<int>(MeshSpace::edges)] = order_by_vertices<2>(mesh.edges_to_vertices, pv);
  return perm;
}

Mesh rcm_renumber(const Mesh& mesh) { return apply_permutation(mesh, rcm_permutation(mesh)); }

} // namespace sparsetile
