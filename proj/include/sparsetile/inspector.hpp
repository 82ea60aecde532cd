#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "sparsetile/chain.hpp"

namespace sparsetile {

using TileId = std::int32_t;
inline constexpr TileId kNoTile = -1;

enum class InspectionMode : std::uint8_t {
  sequential,  // one thread, tile i gets color i
  shared,      // greedy coloring, equal colors run concurrently
  distributed, // rank-local inspection: as sequential, halo regions honored
};

std::string_view to_string(InspectionMode mode);
InspectionMode parse_inspection_mode(std::string_view text);

/// Atomically executed unit of work: one iteration list per loop of the
/// chain, executed loop by loop.
struct Tile {
  TileId id = 0;
  Region region = Region::core;
  int color = 0;
  std::vector<std::vector<Index>> iterations;              // [loop] -> ascending element ids
  std::vector<std::vector<std::vector<Index>>> local_maps; // [loop][descriptor] -> rows, in list order
};

/// sigma_j: the tile of every element of the loop's iteration space.
struct TilingFunction {
  std::size_t loop = 0;
  std::vector<TileId> assignment;
};

/// phi_S: per element of space S, the tile that touches it last (maximum
/// color) among the loops projected so far. kNoTile when untouched.
struct Projection {
  std::size_t space = 0;
  std::vector<TileId> assignment;
};

/// Phi, keyed by space index.
using Projections = std::map<std::size_t, Projection>;

/// Symmetric, irreflexive relation between tiles whose equal colors clash.
class ConflictMatrix {
public:
  void add(TileId a, TileId b);
  bool contains(TileId a, TileId b) const;
  bool empty() const { return pairs_.empty(); }
  std::size_t size() const { return pairs_.size(); }
  void clear() { pairs_.clear(); }
  /// Ordered (low, high) pairs.
  const std::set<std::pair<TileId, TileId>>& pairs() const { return pairs_; }

private:
  std::set<std::pair<TileId, TileId>> pairs_;
};

/// Extra tile adjacencies accumulated across recoloring rounds.
using FakeConnections = std::set<std::pair<TileId, TileId>>;

/// Inverse maps computed on first use and kept for one inspection.
class InverseMapCache {
public:
  explicit InverseMapCache(const LoopChain& chain) : chain_(&chain) {}
  const InverseMap& get(int map);

private:
  const LoopChain* chain_;
  std::map<int, InverseMap> cache_;
};

struct SeedPartition {
  TilingFunction sigma;
  std::vector<Tile> tiles;
};

/// Chunks the core region into ceil(core/ts) tiles of ts contiguous
/// iterations, the boundary region likewise, and adds the non-exec tile last.
/// Every tile gets `num_loops` iteration lists; the seed list is filled.
/// Throws InvalidArgument when ts == 0.
SeedPartition partition_seed(const IterationSpace& space, std::size_t ts, std::size_t num_loops = 1);

/// Map whose source is the seed space: the first indirect descriptor of the
/// seed loop, otherwise any chain map starting there. -1 when none exists.
int find_seed_map(const LoopChain& chain);

/// Assigns colors. Shared mode colors core tiles, then boundary tiles, by
/// greedy first-fit over the tile graph (tiles adjacent when their seed
/// iterations share a seed-map target, plus `fake`); the other modes give
/// tile i color i. Boundary colors always exceed core colors and the
/// non-exec tile (the last one) gets the highest color.
void color_tiles(std::vector<Tile>& tiles, const TilingFunction& seed_sigma, const MeshMap* seed_map,
                 const FakeConnections& fake, InspectionMode mode);

/// Tile adjacency induced by the seed map; sorted, duplicate-free rows.
struct TileGraph {
  std::vector<std::vector<TileId>> adjacency;
};

TileGraph build_tile_graph(const std::vector<Tile>& tiles, const TilingFunction& seed_sigma, const MeshMap* seed_map);

/// As above with the seed-map adjacency computed once by the caller.
void color_tiles(std::vector<Tile>& tiles, const TileGraph& graph, const FakeConnections& fake, InspectionMode mode);

/// Folds loop `loop` (tiled by `sigma`) into `phi` for every space the loop
/// touches, keeping per element the tile of maximum color (the incumbent on
/// ties), and records in `conflicts` every pair of distinct equal-colored
/// tiles that meet on an element.
void project(const LoopChain& chain, const Loop& loop, const TilingFunction& sigma, Projections& phi,
             ConflictMatrix& conflicts, const std::vector<Tile>& tiles, InverseMapCache& inverses);

/// Builds sigma_j: every element goes to the maximum-color tile among the
/// projections reachable through the loop's descriptors. Non-exec elements
/// are pinned to the non-exec tile, boundary elements are never placed in a
/// core tile, and elements no projection reaches fall back to the
/// lowest-colored tile of their region. Throws InspectionError when `phi`
/// lacks an accessed space.
TilingFunction tile_loop(const LoopChain& chain, const Loop& loop, const Projections& phi,
                         const std::vector<Tile>& tiles);

/// Rebuilds every tile's iteration list for sigma.loop from sigma.
void assign(const TilingFunction& sigma, std::vector<Tile>& tiles);

/// Restricts every indirect map to each tile's iteration lists.
void compute_local_maps(std::vector<Tile>& tiles, const LoopChain& chain);

struct InspectionStats {
  std::size_t rounds = 0;
  std::size_t fake_connections = 0;
  double partition_seconds = 0;
  double coloring_seconds = 0;
  double projection_tiling_seconds = 0;
  double local_map_seconds = 0;
  double total_seconds = 0;
};

struct Schedule {
  std::vector<Tile> tiles;
  std::vector<int> color_order; // distinct colors, ascending
  InspectionMode mode = InspectionMode::sequential;
  Fingerprint fingerprint;
  std::size_t tile_size = 0;
  std::size_t num_loops = 0;
  InspectionStats stats;

  TileId nonexec_tile() const { return static_cast<TileId>(tiles.size()) - 1; }
  const Tile& tile(TileId id) const { return tiles.at(static_cast<std::size_t>(id)); }
};

struct InspectOptions {
  bool local_maps = true;
  /// Overrides the round budget of 10 * |tiles|; 0 keeps the default.
  std::size_t max_rounds = 0;
};

/// Full inspection with seed L0: partition, then repeat {color; project and
/// tile every loop} until no color conflict remains, adding a fake
/// connection for every conflicting pair before recoloring.
Schedule inspect(const LoopChain& chain, std::size_t ts, InspectionMode mode, const InspectOptions& options = {});

/// sigma_j for every loop, rebuilt from the iteration lists.
std::vector<TilingFunction> tiling_functions(const Schedule& schedule, const LoopChain& chain);

/// Stable textual form of everything but timings.
std::string serialize_schedule(const Schedule& schedule);

/// Human-readable inspection summary: tiles per region, colors, tile sizes
/// per loop, rounds, phase timings.
std::string inspection_summary(const Schedule& schedule, const LoopChain& chain);

/// Inspections memoized by (chain fingerprint, tile size, mode, local maps).
class ScheduleCache {
public:
  const Schedule& get_or_inspect(const LoopChain& chain, std::size_t ts, InspectionMode mode,
                                 const InspectOptions& options = {});
  std::size_t hits() const { return hits_; }
  std::size_t misses() const { return misses_; }
  std::size_t size() const { return cache_.size(); }

private:
  std::map<std::tuple<std::uint64_t, std::size_t, InspectionMode, bool>, Schedule> cache_;
  std::size_t hits_ = 0;
  std::size_t misses_ = 0;
};

} // namespace sparsetile
