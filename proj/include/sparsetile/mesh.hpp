#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string_view>
#include <utility>
#include <vector>

namespace sparsetile {

using Index = std::uint32_t;

/// The three topological entities a 2D triangle mesh exposes as iteration
/// spaces.
enum class MeshSpace : int { cells = 0, edges = 1, vertices = 2 };

inline constexpr std::array<MeshSpace, 3> kMeshSpaces{MeshSpace::cells, MeshSpace::edges,
                                                      MeshSpace::vertices};

/// Iteration-space name used for each entity when a mesh backs a loop chain.
std::string_view space_name(MeshSpace space);

struct Mesh {
  std::size_t num_vertices = 0;
  std::size_t num_cells = 0;
  std::size_t num_edges = 0;
  std::vector<Index> cells_to_vertices; // 3 per cell
  std::vector<Index> edges_to_vertices; // 2 per edge
  std::vector<std::array<double, 2>> vertex_coords;

  std::size_t size(MeshSpace space) const;
};

/// Throws InvalidArgument describing the first broken invariant (index range,
/// repeated vertices, edge set different from the set of cell sides).
void validate_mesh(const Mesh& mesh);

/// Structured triangulation of an nx by ny quad grid. Every quad is split by
/// its bottom-left to top-right diagonal. Vertex (i, j) has id j*(nx+1)+i;
/// cells are numbered quad by quad; edges in order of first appearance while
/// walking the cells.
Mesh generate_rect_mesh(std::size_t nx, std::size_t ny);

/// new_of_old[space][old] = new index; one bijection per space.
struct MeshPermutation {
  std::array<std::vector<Index>, 3> new_of_old;
};

MeshPermutation invert(const MeshPermutation& perm);
Mesh apply_permutation(const Mesh& mesh, const MeshPermutation& perm);

/// Reverse Cuthill-McKee ordering of an undirected graph in CSR form.
/// Starts from a pseudo-peripheral vertex; throws UnsupportedInput when the
/// graph is disconnected. Returns order[k] = old id of the k-th new vertex.
std::vector<Index> rcm_ordering(const std::vector<Index>& offsets,
                                const std::vector<Index>& adjacency);

/// Vertex relabeling by RCM; cells and edges are then sorted by their
/// (sorted) new vertex tuples. The input numbering is kept when RCM would
/// raise the vertex bandwidth.
MeshPermutation rcm_permutation(const Mesh& mesh);
Mesh rcm_renumber(const Mesh& mesh);

/// max |i - j| over vertex pairs joined by an edge.
std::size_t vertex_bandwidth(const Mesh& mesh);

// ---------------------------------------------------------------------------
// Per-rank decomposition

/// Element counts of the four contiguous regions of one local space.
/// boundary = owned + exec.
struct RegionSizes {
  std::size_t core = 0;
  std::size_t owned = 0;
  std::size_t exec = 0;
  std::size_t non_exec = 0;

  std::size_t total() const { return core + owned + exec + non_exec; }
  std::size_t boundary() const { return owned + exec; }
  std::size_t local_owned() const { return core + owned; }
};

/// One halo copy between two ranks: the element's local index on this rank
/// and on the neighbor.
struct HaloPair {
  Index here = 0;
  Index there = 0;
  bool operator==(const HaloPair&) const = default;
};

struct LocalMesh {
  int rank = 0;
  std::array<RegionSizes, 3> regions{};
  std::vector<Index> cells_to_vertices; // local indices
  std::vector<Index> edges_to_vertices; // local indices
  std::array<std::vector<Index>, 3> global_ids;
  /// (space, neighbor) -> shared elements sorted by global id. Elements owned
  /// here are sent; elements owned by the neighbor are received.
  std::map<std::pair<MeshSpace, int>, std::vector<HaloPair>> exchange_table;
  std::vector<std::array<double, 2>> vertex_coords;

  const RegionSizes& region(MeshSpace s) const { return regions[static_cast<int>(s)]; }
  const std::vector<Index>& gids(MeshSpace s) const { return global_ids[static_cast<int>(s)]; }
  std::size_t size(MeshSpace s) const { return region(s).total(); }
};

/// Global owner rank of every element, per space. Cells are split in
/// contiguous blocks; a vertex or edge belongs to the lowest rank among its
/// incident cells.
struct Ownership {
  std::array<std::vector<int>, 3> owner;
};

Ownership compute_ownership(const Mesh& mesh, int nranks);

/// Splits the mesh into per-rank local meshes with `depth` strips of
/// off-process elements (the last strip read-only). Throws InvalidArgument
/// for nranks < 1, nranks > num_cells or depth < 1.
std::vector<LocalMesh> partition_for_ranks(const Mesh& mesh, int nranks, std::size_t depth);

} // namespace sparsetile
