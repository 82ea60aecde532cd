#include "sparsetile/inspector.hpp"

#include <algorithm>
#include <chrono>
#include <iomanip>
#include <sstream>

#include "sparsetile/errors.hpp"

namespace sparsetile {

std::string_view to_string(InspectionMode mode) {
  switch (mode) {
  case InspectionMode::sequential:
    return "sequential";
  case InspectionMode::shared:
    return "shared";
  case InspectionMode::distributed:
    return "distributed";
  }
  return "?";
}

InspectionMode parse_inspection_mode(std::string_view text) {
  if (text == "sequential" || text == "seq") return InspectionMode::sequential;
  if (text == "shared" || text == "omp") return InspectionMode::shared;
  if (text == "distributed" || text == "mpi") return InspectionMode::distributed;
  throw InvalidArgument("unknown mode '" + std::string(text) + "'");
}

void ConflictMatrix::add(TileId a, TileId b) {
  if (a == b) return;
  pairs_.insert(a < b ? std::pair{a, b} : std::pair{b, a});
}

bool ConflictMatrix::contains(TileId a, TileId b) const {
  return pairs_.count(a < b ? std::pair{a, b} : std::pair{b, a}) > 0;
}

const InverseMap& InverseMapCache::get(int map) {
  auto it = cache_.find(map);
  if (it == cache_.end()) {
    const MeshMap& m = chain_->map(static_cast<std::size_t>(map));
    it = cache_.emplace(map, invert_map(m, chain_->space(chain_->space_index(m.target)).size())).first;
  }
  return it->second;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

} // namespace

// ---------------------------------------------------------------------------
// Seed partitioning and coloring

SeedPartition partition_seed(const IterationSpace& space, std::size_t ts, std::size_t num_loops) {
  if (ts == 0) throw InvalidArgument("partition_seed: tile size must be >= 1");
  if (num_loops == 0) num_loops = 1;
  SeedPartition out;
  out.sigma.loop = 0;
  out.sigma.assignment.assign(space.size(), kNoTile);

  auto add_tile = [&](Region region) {
    Tile t;
    t.id = static_cast<TileId>(out.tiles.size());
    t.region = region;
    t.iterations.resize(num_loops);
    t.local_maps.resize(num_loops);
    out.tiles.push_back(std::move(t));
    return out.tiles.back().id;
  };
  auto chunk = [&](std::size_t begin, std::size_t count, Region region) {
    for (std::size_t off = 0; off < count; off += ts) {
      TileId id = add_tile(region);
      for (std::size_t e = begin + off; e < begin + std::min(count, off + ts); ++e) {
        out.sigma.assignment[e] = id;
        out.tiles[id].iterations[0].push_back(static_cast<Index>(e));
      }
    }
  };
  chunk(0, space.core_size, Region::core);
  chunk(space.core_size, space.boundary_size, Region::boundary);
  TileId ne = add_tile(Region::non_exec);
  for (std::size_t e = space.executable_size(); e < space.size(); ++e) {
    out.sigma.assignment[e] = ne;
    out.tiles[ne].iterations[0].push_back(static_cast<Index>(e));
  }
  return out;
}

int find_seed_map(const LoopChain& chain) {
  const Loop& seed = chain.loops().front();
  for (const auto& a : seed.accesses)
    if (!a.is_direct()) return a.map;
  const std::string& name = chain.space_of(seed).name;
  for (std::size_t m = 0; m < chain.maps().size(); ++m)
    if (chain.map(m).source == name) return static_cast<int>(m);
  return -1;
}

TileGraph build_tile_graph(const std::vector<Tile>& tiles, const TilingFunction& seed_sigma, const MeshMap* seed_map) {
  TileGraph g;
  g.adjacency.resize(tiles.size());
  if (seed_map == nullptr) return g;
  const std::size_t a = seed_map->arity;
  // CSR of target -> touching tiles, filled in seed order
  Index targets = 0;
  for (Index v : seed_map->values) targets = std::max(targets, static_cast<Index>(v + 1));
  std::vector<Index> offsets(targets + 1, 0);
  const std::size_t rows = std::min(seed_sigma.assignment.size(), seed_map->values.size() / a);
  for (std::size_t e = 0; e < rows; ++e)
    for (std::size_t k = 0; k < a; ++k) ++offsets[seed_map->values[e * a + k] + 1];
  for (Index v = 0; v < targets; ++v) offsets[v + 1] += offsets[v];
  std::vector<TileId> touching(offsets.back(), kNoTile);
  std::vector<Index> fill(offsets.begin(), offsets.end() - 1);
  for (std::size_t e = 0; e < rows; ++e) {
    TileId t = seed_sigma.assignment[e];
    if (t == kNoTile || tiles[t].region == Region::non_exec) continue;
    for (std::size_t k = 0; k < a; ++k) touching[fill[seed_map->values[e * a + k]]++] = t;
  }
  std::vector<TileId> seg;
  for (Index v = 0; v < targets; ++v) {
    seg.assign(touching.begin() + offsets[v], touching.begin() + fill[v]);
    if (seg.size() < 2) continue;
    std::sort(seg.begin(), seg.end());
    seg.erase(std::unique(seg.begin(), seg.end()), seg.end());
    for (std::size_t x = 0; x < seg.size(); ++x)
      for (std::size_t y = x + 1; y < seg.size(); ++y) {
        g.adjacency[seg[x]].push_back(seg[y]);
        g.adjacency[seg[y]].push_back(seg[x]);
      }
  }
  for (auto& nbs : g.adjacency) {
    std::sort(nbs.begin(), nbs.end());
    nbs.erase(std::unique(nbs.begin(), nbs.end()), nbs.end());
  }
  return g;
}

void color_tiles(std::vector<Tile>& tiles, const TileGraph& graph, const FakeConnections& fake, InspectionMode mode) {
  if (tiles.empty()) return;
  if (mode != InspectionMode::shared) {
    for (auto& t : tiles) t.color = t.id;
    return;
  }

  const std::size_t n = tiles.size();
  // fake connections as CSR
  std::vector<std::size_t> xoff(n + 1, 0);
  auto valid = [n](TileId x) { return x >= 0 && static_cast<std::size_t>(x) < n; };
  for (auto [x, y] : fake)
    if (valid(x) && valid(y)) ++xoff[x + 1], ++xoff[y + 1];
  for (std::size_t i = 0; i < n; ++i) xoff[i + 1] += xoff[i];
  std::vector<TileId> xadj(xoff.back());
  std::vector<std::size_t> xfill(xoff.begin(), xoff.end() - 1);
  for (auto [x, y] : fake)
    if (valid(x) && valid(y)) xadj[xfill[x]++] = y, xadj[xfill[y]++] = x;

  std::vector<bool> colored(n, false);
  std::vector<TileId> used(n + 1, kNoTile); // used[c] == t: color base+c taken around tile t
  auto greedy = [&](Region region, int base) {
    int top = base - 1;
    for (auto& t : tiles) {
      if (t.region != region) continue;
      auto mark = [&](TileId nb) {
        if (colored[nb] && tiles[nb].color >= base) used[tiles[nb].color - base] = t.id;
      };
      if (static_cast<std::size_t>(t.id) < graph.adjacency.size())
        for (TileId nb : graph.adjacency[t.id]) mark(nb);
      for (std::size_t k = xoff[t.id]; k < xoff[t.id + 1]; ++k) mark(xadj[k]);
      int c = 0;
      while (used[c] == t.id) ++c;
      t.color = base + c;
      colored[t.id] = true;
      top = std::max(top, t.color);
    }
    return top;
  };
  int top = greedy(Region::core, 0);
  top = greedy(Region::boundary, top + 1);
  for (auto& t : tiles)
    if (t.region == Region::non_exec) t.color = ++top;
}

void color_tiles(std::vector<Tile>& tiles, const TilingFunction& seed_sigma, const MeshMap* seed_map,
                 const FakeConnections& fake, InspectionMode mode) {
  const TileGraph graph =
      mode == InspectionMode::shared ? build_tile_graph(tiles, seed_sigma, seed_map) : TileGraph{};
  color_tiles(tiles, graph, fake, mode);
}

// ---------------------------------------------------------------------------
// Projection and tiling

namespace {

// Records every equal-colored pair among `touch` (a scratch buffer that gets
// sorted in place).
void record_clashes(std::vector<std::pair<int, TileId>>& touch, ConflictMatrix& conflicts) {
  if (touch.size() < 2) return;
  std::sort(touch.begin(), touch.end());
  touch.erase(std::unique(touch.begin(), touch.end()), touch.end());
  for (std::size_t i = 0; i < touch.size(); ++i)
    for (std::size_t j = i + 1; j < touch.size() && touch[j].first == touch[i].first; ++j)
      conflicts.add(touch[i].second, touch[j].second);
}

} // namespace

void project(const LoopChain& chain, const Loop& loop, const TilingFunction& sigma, Projections& phi,
             ConflictMatrix& conflicts, const std::vector<Tile>& tiles, InverseMapCache& inverses) {
  const auto color = [&](TileId t) { return tiles[static_cast<std::size_t>(t)].color; };
  if (sigma.assignment.size() != chain.space_of(loop).size())
    throw InspectionError("project: tiling function does not cover the loop's space");

  std::vector<std::pair<int, TileId>> touch;
  for (const auto& access : loop.accesses) {
    const std::size_t size = chain.space(access.space).size();
    auto [it, fresh] = phi.try_emplace(access.space);
    Projection& p = it->second;
    if (fresh || p.assignment.size() != size) {
      p.space = access.space;
      p.assignment.assign(size, kNoTile);
    }
    auto& cur = p.assignment;

    if (access.is_direct()) {
      for (std::size_t e = 0; e < size; ++e) {
        TileId t = sigma.assignment[e];
        if (t == kNoTile) continue;
        TileId inc = cur[e];
        if (inc != kNoTile && inc != t && color(inc) == color(t)) conflicts.add(inc, t);
        if (inc == kNoTile || color(t) >= color(inc)) cur[e] = t;
      }
      continue;
    }

    const InverseMap& inv = inverses.get(access.map);
    for (std::size_t e = 0; e < size; ++e) {
      touch.clear();
      TileId best = cur[e];
      if (best != kNoTile) touch.emplace_back(color(best), best);
      for (Index k = inv.offsets[e]; k < inv.offsets[e + 1]; ++k) {
        TileId t = sigma.assignment[inv.values[k]];
        if (t == kNoTile) continue;
        touch.emplace_back(color(t), t);
        if (best == kNoTile || color(t) > color(best)) best = t;
      }
      cur[e] = best;
      record_clashes(touch, conflicts);
    }
  }
}

TilingFunction tile_loop(const LoopChain& chain, const Loop& loop, const Projections& phi,
                         const std::vector<Tile>& tiles) {
  if (tiles.empty() || tiles.back().region != Region::non_exec)
    throw InspectionError("tile_loop: tile list must end with the non-exec tile");
  const auto color = [&](TileId t) { return tiles[static_cast<std::size_t>(t)].color; };
  const TileId ne = static_cast<TileId>(tiles.size()) - 1;
  TileId low_core = kNoTile, low_boundary = kNoTile;
  for (const auto& t : tiles) {
    if (t.region == Region::non_exec) continue;
    TileId& slot = t.region == Region::core ? low_core : low_boundary;
    if (slot == kNoTile || t.color < color(slot)) slot = t.id;
  }

  const IterationSpace& space = chain.space_of(loop);
  TilingFunction sigma;
  sigma.loop = loop.index;
  auto& out = sigma.assignment;
  out.assign(space.size(), kNoTile);
  for (std::size_t e = space.core_size; e < space.size(); ++e) {
    if (space.region_of(static_cast<Index>(e)) == Region::non_exec) {
      out[e] = ne;
    } else {
      if (low_boundary == kNoTile)
        throw InspectionError("tile_loop: space '" + space.name + "' has boundary elements but the seed has no boundary tiles");
      out[e] = low_boundary;
    }
  }

  for (const auto& access : loop.accesses) {
    auto it = phi.find(access.space);
    if (it == phi.end())
      throw InspectionError("tile_loop: no projection for space '" + chain.space(access.space).name + "'");
    const auto& p = it->second.assignment;
    auto raise = [&](TileId& slot, TileId cand) {
      if (cand != kNoTile && (slot == kNoTile || color(cand) > color(slot))) slot = cand;
    };
    if (access.is_direct()) {
      for (std::size_t e = 0; e < out.size(); ++e) raise(out[e], p[e]);
    } else {
      const auto& values = chain.map(static_cast<std::size_t>(access.map)).values;
      const std::size_t a = access.arity;
      for (std::size_t e = 0; e < out.size(); ++e)
        for (std::size_t k = 0; k < a; ++k) raise(out[e], p[values[e * a + k]]);
    }
  }

  for (std::size_t e = 0; e < out.size(); ++e)
    if (out[e] == kNoTile) out[e] = low_core != kNoTile ? low_core : low_boundary != kNoTile ? low_boundary : ne;
  return sigma;
}

void assign(const TilingFunction& sigma, std::vector<Tile>& tiles) {
  for (auto& t : tiles) {
    if (t.iterations.size() <= sigma.loop) t.iterations.resize(sigma.loop + 1);
    t.iterations[sigma.loop].clear();
  }
  for (std::size_t e = 0; e < sigma.assignment.size(); ++e) {
    TileId t = sigma.assignment[e];
    if (t == kNoTile || static_cast<std::size_t>(t) >= tiles.size())
      throw InspectionError("assign: tiling function is not total");
    tiles[t].iterations[sigma.loop].push_back(static_cast<Index>(e));
  }
}

void compute_local_maps(std::vector<Tile>& tiles, const LoopChain& chain) {
  for (auto& t : tiles) {
    t.local_maps.assign(chain.size(), {});
    for (const auto& loop : chain.loops()) {
      auto& per_desc = t.local_maps[loop.index];
      per_desc.resize(loop.accesses.size());
      if (t.iterations.size() <= loop.index) continue;
      const auto& list = t.iterations[loop.index];
      for (std::size_t d = 0; d < loop.accesses.size(); ++d) {
        const auto& access = loop.accesses[d];
        if (access.is_direct()) continue;
        const auto& values = chain.map(static_cast<std::size_t>(access.map)).values;
        auto& lm = per_desc[d];
        lm.reserve(list.size() * access.arity);
        for (Index e : list)
          lm.insert(lm.end(), values.begin() + e * access.arity, values.begin() + (e + 1) * access.arity);
      }
    }
  }
}

// ---------------------------------------------------------------------------

Schedule inspect(const LoopChain& chain, std::size_t ts, InspectionMode mode, const InspectOptions& options) {
  const auto t_start = Clock::now();
  if (mode == InspectionMode::distributed && chain.size() > chain.depth())
    throw DepthExceeded(std::to_string(chain.size()) + " loops exceed the halo depth " + std::to_string(chain.depth()));

  Schedule schedule;
  schedule.mode = mode;
  schedule.fingerprint = chain_fingerprint(chain);
  schedule.tile_size = ts;
  schedule.num_loops = chain.size();
  InspectionStats& stats = schedule.stats;

  auto t0 = Clock::now();
  SeedPartition seed = partition_seed(chain.space_of(chain.loops().front()), ts, chain.size());
  std::vector<Tile>& tiles = seed.tiles;
  stats.partition_seconds = seconds_since(t0);

  const int seed_map_index = find_seed_map(chain);
  const MeshMap* seed_map = seed_map_index >= 0 ? &chain.map(static_cast<std::size_t>(seed_map_index)) : nullptr;
  const std::size_t budget = options.max_rounds > 0 ? options.max_rounds : 10 * tiles.size();
  t0 = Clock::now();
  const TileGraph graph = mode == InspectionMode::shared ? build_tile_graph(tiles, seed.sigma, seed_map) : TileGraph{};
  stats.coloring_seconds += seconds_since(t0);

  InverseMapCache inverses(chain);
  FakeConnections fake;
  ConflictMatrix conflicts;
  bool again = true;
  while (again) {
    if (++stats.rounds > budget)
      throw NonTermination("inspection did not converge after " + std::to_string(budget) + " coloring rounds");

    t0 = Clock::now();
    color_tiles(tiles, graph, fake, mode);
    stats.coloring_seconds += seconds_since(t0);

    t0 = Clock::now();
    Projections phi;
    for (std::size_t s = 0; s < chain.spaces().size(); ++s)
      phi[s] = Projection{s, std::vector<TileId>(chain.space(s).size(), kNoTile)};
    conflicts.clear();
    TilingFunction previous = seed.sigma;
    for (std::size_t j = 1; j < chain.size(); ++j) {
      project(chain, chain.loops()[j - 1], previous, phi, conflicts, tiles, inverses);
      TilingFunction sigma = tile_loop(chain, chain.loops()[j], phi, tiles);
      assign(sigma, tiles);
      previous = std::move(sigma);
    }
    // the last loop never feeds a projection, but its clashes still count
    project(chain, chain.loops().back(), previous, phi, conflicts, tiles, inverses);
    stats.projection_tiling_seconds += seconds_since(t0);

    again = !conflicts.empty();
    fake.insert(conflicts.pairs().begin(), conflicts.pairs().end());
  }
  stats.fake_connections = fake.size();

  if (options.local_maps) {
    t0 = Clock::now();
    compute_local_maps(tiles, chain);
    stats.local_map_seconds = seconds_since(t0);
  }

  for (const auto& t : tiles) schedule.color_order.push_back(t.color);
  std::sort(schedule.color_order.begin(), schedule.color_order.end());
  schedule.color_order.erase(std::unique(schedule.color_order.begin(), schedule.color_order.end()),
                             schedule.color_order.end());
  schedule.tiles = std::move(tiles);
  stats.total_seconds = seconds_since(t_start);
  return schedule;
}

std::vector<TilingFunction> tiling_functions(const Schedule& schedule, const LoopChain& chain) {
  std::vector<TilingFunction> out(chain.size());
  for (const auto& loop : chain.loops()) {
    auto& sigma = out[loop.index];
    sigma.loop = loop.index;
    sigma.assignment.assign(chain.space_of(loop).size(), kNoTile);
    for (const auto& t : schedule.tiles)
      if (loop.index < t.iterations.size())
        for (Index e : t.iterations[loop.index]) sigma.assignment.at(e) = t.id;
  }
  return out;
}

std::string serialize_schedule(const Schedule& schedule) {
  std::ostringstream os;
  os << "schedule 1\n"
     << "mode " << to_string(schedule.mode) << "\n"
     << "fingerprint " << schedule.fingerprint.hex() << "\n"
     << "tile_size " << schedule.tile_size << "\n"
     << "loops " << schedule.num_loops << "\n"
     << "tiles " << schedule.tiles.size() << "\n";
  for (const auto& t : schedule.tiles) {
    os << "tile " << t.id << ' ' << to_string(t.region) << ' ' << t.color << '\n';
    for (std::size_t j = 0; j < t.iterations.size(); ++j) {
      os << "  it " << j << ' ' << t.iterations[j].size() << ':';
      for (Index e : t.iterations[j]) os << ' ' << e;
      os << '\n';
    }
    for (std::size_t j = 0; j < t.local_maps.size(); ++j)
      for (std::size_t d = 0; d < t.local_maps[j].size(); ++d) {
        if (t.local_maps[j][d].empty()) continue;
        os << "  lm " << j << ' ' << d << ' ' << t.local_maps[j][d].size() << ':';
        for (Index v : t.local_maps[j][d]) os << ' ' << v;
        os << '\n';
      }
  }
  os << "colors";
  for (int c : schedule.color_order) os << ' ' << c;
  os << '\n';
  return os.str();
}

std::string inspection_summary(const Schedule& schedule, const LoopChain& chain) {
  std::size_t per_region[3] = {0, 0, 0};
  for (const auto& t : schedule.tiles) ++per_region[static_cast<int>(t.region)];
  const auto& st = schedule.stats;
  std::ostringstream os;
  os << "inspection summary (" << to_string(schedule.mode) << ", ts=" << schedule.tile_size
     << ", fingerprint " << schedule.fingerprint.hex() << ")\n";
  os << "  tiles: " << schedule.tiles.size() << " (core " << per_region[0] << ", boundary " << per_region[1]
     << ", non-exec " << per_region[2] << ")\n";
  os << "  colors: " << schedule.color_order.size() << "\n";
  os << "  coloring rounds: " << st.rounds << " (fake connections " << st.fake_connections << ")\n";
  for (const auto& loop : chain.loops()) {
    std::size_t lo = SIZE_MAX, hi = 0, sum = 0, n = 0;
    for (const auto& t : schedule.tiles) {
      if (t.region == Region::non_exec) continue;
      std::size_t sz = loop.index < t.iterations.size() ? t.iterations[loop.index].size() : 0;
      lo = std::min(lo, sz);
      hi = std::max(hi, sz);
      sum += sz;
      ++n;
    }
    if (n == 0) lo = 0;
    os << "  loop " << loop.index << " over " << chain.space_of(loop).name << " [" << loop.kernel
       << "]: tile size min " << lo << " mean " << std::fixed << std::setprecision(2)
       << (n ? static_cast<double>(sum) / n : 0.0) << " max " << hi << "\n";
    os.unsetf(std::ios::fixed);
  }
  const double total = st.total_seconds > 0 ? st.total_seconds : 1e-300;
  os << std::scientific << std::setprecision(3);
  os << "  time: total " << st.total_seconds << " s\n";
  os << std::fixed << std::setprecision(1);
  os << "    partition " << 100 * st.partition_seconds / total << "%\n"
     << "    coloring " << 100 * st.coloring_seconds / total << "%\n"
     << "    projection+tiling " << 100 * st.projection_tiling_seconds / total << "%\n"
     << "    local maps " << 100 * st.local_map_seconds / total << "%\n";
  return os.str();
}

const Schedule& ScheduleCache::get_or_inspect(const LoopChain& chain, std::size_t ts, InspectionMode mode,
                                              const InspectOptions& options) {
  auto key = std::tuple{chain_fingerprint(chain).value, ts, mode, options.local_maps};
  auto it = cache_.find(key);
  if (it != cache_.end()) {
    ++hits_;
    return it->second;
  }
  ++misses_;
  return cache_.emplace(key, inspect(chain, ts, mode, options)).first->second;
}

} // namespace sparsetile
