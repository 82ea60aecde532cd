#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "sparsetile/errors.hpp"
#include "sparsetile/mesh.hpp"

using namespace sparsetile;

namespace {

std::size_t brute_bandwidth(const Mesh& m) {
  std::size_t bw = 0;
  for (std::size_t c = 0; c < m.num_cells; ++c)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const long a = m.cells_to_vertices[3 * c + i], b = m.cells_to_vertices[3 * c + j];
        bw = std::max<std::size_t>(bw, static_cast<std::size_t>(std::labs(a - b)));
      }
  return bw;
}

std::set<std::vector<Index>> cell_sets(const Mesh& m) {
  std::set<std::vector<Index>> out;
  for (std::size_t c = 0; c < m.num_cells; ++c) {
    std::vector<Index> t(m.cells_to_vertices.begin() + 3 * c, m.cells_to_vertices.begin() + 3 * c + 3);
    std::sort(t.begin(), t.end());
    out.insert(t);
  }
  return out;
}

} // namespace

TEST_CASE("rect mesh sizes") {
  auto m = generate_rect_mesh(1, 1);
  CHECK(m.num_cells == 2);
  CHECK(m.num_vertices == 4);
  CHECK(m.num_edges == 5);

  m = generate_rect_mesh(2, 1);
  CHECK(m.num_cells == 4);
  CHECK(m.num_vertices == 6);
  CHECK(m.num_edges == 9);

  for (std::size_t nx : {1, 3, 7})
    for (std::size_t ny : {1, 2, 5}) {
      m = generate_rect_mesh(nx, ny);
      std::set<std::pair<Index, Index>> sides;
      for (std::size_t c = 0; c < m.num_cells; ++c)
        for (int k = 0; k < 3; ++k) {
          Index a = m.cells_to_vertices[3 * c + k], b = m.cells_to_vertices[3 * c + (k + 1) % 3];
          sides.insert({std::min(a, b), std::max(a, b)});
        }
      CHECK(sides.size() == m.num_edges);
      CHECK(static_cast<long>(m.num_vertices) - static_cast<long>(m.num_edges) + static_cast<long>(m.num_cells) == 1);
      CHECK(m.num_cells == 2 * nx * ny);
      CHECK_NOTHROW(validate_mesh(m));
    }
}

TEST_CASE("rect mesh rejects zero dimensions") {
  CHECK_THROWS_AS(generate_rect_mesh(0, 3), InvalidArgument);
  CHECK_THROWS_AS(generate_rect_mesh(3, 0), InvalidArgument);
}

TEST_CASE("validate_mesh catches broken connectivity") {
  auto m = generate_rect_mesh(2, 2);
  m.cells_to_vertices[4] = m.cells_to_vertices[3];
  CHECK_THROWS_AS(validate_mesh(m), InvalidArgument);
  m = generate_rect_mesh(2, 2);
  m.edges_to_vertices[0] = static_cast<Index>(m.num_vertices);
  CHECK_THROWS_AS(validate_mesh(m), InvalidArgument);
}

TEST_CASE("rcm keeps an RCM-ordered path fixed") {
  // path 0-1-2-3-4
  std::vector<Index> off{0, 1, 3, 5, 7, 8}, adj{1, 0, 2, 1, 3, 2, 4, 3};
  auto order = rcm_ordering(off, adj);
  std::vector<Index> id{0, 1, 2, 3, 4};
  std::vector<Index> rev{4, 3, 2, 1, 0};
  CHECK((order == id || order == rev));
}

TEST_CASE("rcm rejects disconnected graphs") {
  std::vector<Index> off{0, 1, 2, 2}, adj{1, 0};
  CHECK_THROWS_AS(rcm_ordering(off, adj), UnsupportedInput);
}

TEST_CASE("rcm does not widen the bandwidth") {
  for (auto [nx, ny] : std::vector<std::pair<int, int>>{{4, 4}, {8, 3}, {3, 9}, {16, 8}}) {
    const auto m = generate_rect_mesh(nx, ny);
    const auto r = rcm_renumber(m);
    CHECK_NOTHROW(validate_mesh(r));
    CHECK(brute_bandwidth(r) <= brute_bandwidth(m));
    CHECK(vertex_bandwidth(m) == brute_bandwidth(m));
  }
}

TEST_CASE("permutation roundtrip restores connectivity") {
  const auto m = generate_rect_mesh(5, 3);
  const auto p = rcm_permutation(m);
  for (MeshSpace s : kMeshSpaces) {
    auto v = p.new_of_old[static_cast<int>(s)];
    std::sort(v.begin(), v.end());
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(v[i] == i);
  }
  const auto back = apply_permutation(apply_permutation(m, p), invert(p));
  CHECK(back.cells_to_vertices == m.cells_to_vertices);
  CHECK(back.edges_to_vertices == m.edges_to_vertices);
  CHECK(cell_sets(apply_permutation(m, p)).size() == m.num_cells);
}

TEST_CASE("single rank partition is all core") {
  const auto m = generate_rect_mesh(3, 2);
  auto locals = partition_for_ranks(m, 1, 2);
  REQUIRE(locals.size() == 1);
  for (MeshSpace s : kMeshSpaces) {
    CHECK(locals[0].region(s).core == m.size(s));
    CHECK(locals[0].region(s).boundary() == 0);
    CHECK(locals[0].region(s).non_exec == 0);
  }
  CHECK(locals[0].exchange_table.empty());
}

TEST_CASE("partition argument checks") {
  const auto m = generate_rect_mesh(2, 1);
  CHECK_THROWS_AS(partition_for_ranks(m, 5, 1), InvalidArgument);
  CHECK_THROWS_AS(partition_for_ranks(m, 0, 1), InvalidArgument);
  CHECK_THROWS_AS(partition_for_ranks(m, 2, 0), InvalidArgument);
}

TEST_CASE("two ranks on 4x2: halo membership matches the cut") {
  const auto m = generate_rect_mesh(4, 2);
  const auto own = compute_ownership(m, 2);
  const auto locals = partition_for_ranks(m, 2, 1);
  REQUIRE(locals.size() == 2);
  // brute force: vertices of cells sharing a vertex with a rank-1 cell
  std::set<Index> touched1, near1;
  for (std::size_t c = 0; c < m.num_cells; ++c)
    if (own.owner[0][c] == 1)
      for (int k = 0; k < 3; ++k) touched1.insert(m.cells_to_vertices[3 * c + k]);
  for (std::size_t c = 0; c < m.num_cells; ++c) {
    bool adjacent = false;
    for (int k = 0; k < 3; ++k) adjacent = adjacent || touched1.count(m.cells_to_vertices[3 * c + k]) > 0;
    if (adjacent)
      for (int k = 0; k < 3; ++k) near1.insert(m.cells_to_vertices[3 * c + k]);
  }
  const auto& l1 = locals[1];
  const auto& g1 = l1.gids(MeshSpace::vertices);
  std::set<Index> in_halo1(g1.begin() + l1.region(MeshSpace::vertices).local_owned(), g1.end());
  for (std::size_t v = 0; v < m.num_vertices; ++v)
    if (own.owner[2][v] == 0) CHECK(in_halo1.count(static_cast<Index>(v)) == near1.count(static_cast<Index>(v)));
}

TEST_CASE("rank-local meshes: regions, ownership, closure") {
  const auto m = generate_rect_mesh(8, 4);
  for (int nranks : {2, 3, 4})
    for (std::size_t depth : {1, 2, 3}) {
      const auto locals = partition_for_ranks(m, nranks, depth);
      for (MeshSpace s : kMeshSpaces) {
        std::vector<int> owned(m.size(s), 0);
        for (const auto& lm : locals) {
          const auto& g = lm.gids(s);
          REQUIRE(g.size() == lm.size(s));
          for (std::size_t e = 0; e < lm.region(s).local_owned(); ++e) ++owned[g[e]];
          std::set<Index> uniq(g.begin(), g.end());
          CHECK(uniq.size() == g.size());
        }
        for (int c : owned) CHECK(c == 1);
      }
      for (const auto& lm : locals) {
        for (Index v : lm.cells_to_vertices) CHECK(v < lm.size(MeshSpace::vertices));
        for (Index v : lm.edges_to_vertices) CHECK(v < lm.size(MeshSpace::vertices));
        // exec cells of this rank are owned elsewhere
        const auto& rc = lm.region(MeshSpace::cells);
        const auto& gc = lm.gids(MeshSpace::cells);
        for (std::size_t e = rc.local_owned(); e < rc.local_owned() + rc.exec; ++e) {
          bool owned_elsewhere = false;
          for (const auto& other : locals) {
            if (other.rank == lm.rank) continue;
            const auto& og = other.gids(MeshSpace::cells);
            const auto& orr = other.region(MeshSpace::cells);
            owned_elsewhere |= std::find(og.begin(), og.begin() + orr.local_owned(), gc[e]) != og.begin() + orr.local_owned();
          }
          CHECK(owned_elsewhere);
        }
      }
    }
}

TEST_CASE("exec ids of rank 0 are owned ids of rank 1") {
  const auto m = generate_rect_mesh(4, 2);
  const auto locals = partition_for_ranks(m, 2, 2);
  for (MeshSpace s : kMeshSpaces) {
    const auto& r0 = locals[0].region(s);
    const auto& g0 = locals[0].gids(s);
    const auto& r1 = locals[1].region(s);
    const auto& g1 = locals[1].gids(s);
    std::set<Index> owned1(g1.begin() + r1.core, g1.begin() + r1.local_owned());
    for (std::size_t e = r0.local_owned(); e < r0.local_owned() + r0.exec; ++e) CHECK(owned1.count(g0[e]) == 1);
    std::set<Index> core0(g0.begin(), g0.begin() + r0.core);
    for (std::size_t e = r0.core; e < r0.local_owned() + r0.exec; ++e) CHECK(core0.count(g0[e]) == 0);
  }
}

TEST_CASE("depth-d halo contains every element within d hops") {
  const auto m = generate_rect_mesh(6, 4);
  const auto own = compute_ownership(m, 3);
  for (std::size_t depth : {1, 2, 3}) {
    const auto locals = partition_for_ranks(m, 3, depth);
    for (const auto& lm : locals) {
      // brute-force vertex distance from owned cells through cell-vertex incidence
      std::set<Index> reach;
      for (std::size_t c = 0; c < m.num_cells; ++c)
        if (own.owner[0][c] == lm.rank)
          for (int k = 0; k < 3; ++k) reach.insert(m.cells_to_vertices[3 * c + k]);
      std::set<Index> cells;
      for (std::size_t hop = 0; hop < depth; ++hop) {
        std::set<Index> next = reach;
        for (std::size_t c = 0; c < m.num_cells; ++c)
          for (int k = 0; k < 3; ++k)
            if (reach.count(m.cells_to_vertices[3 * c + k])) {
              cells.insert(static_cast<Index>(c));
              for (int q = 0; q < 3; ++q) next.insert(m.cells_to_vertices[3 * c + q]);
            }
        reach = next;
      }
      const auto& gc = lm.gids(MeshSpace::cells);
      std::set<Index> local(gc.begin(), gc.end());
      for (Index c : cells) CHECK(local.count(c) == 1);
    }
  }
}
