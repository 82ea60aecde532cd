#include "sparsetile/verify.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace sparsetile {

std::vector<std::string> check_partition(const Schedule& schedule, const LoopChain& chain) {
  std::vector<std::string> issues;
  for (const auto& loop : chain.loops()) {
    const IterationSpace& space = chain.space_of(loop);
    std::vector<int> hits(space.size(), 0);
    for (const auto& tile : schedule.tiles) {
      if (loop.index >= tile.iterations.size()) {
        issues.push_back("tile " + std::to_string(tile.id) + " has no list for loop " + std::to_string(loop.index));
        continue;
      }
      const auto& list = tile.iterations[loop.index];
      if (!std::is_sorted(list.begin(), list.end()))
        issues.push_back("tile " + std::to_string(tile.id) + " loop " + std::to_string(loop.index) +
                         ": iterations not ascending");
      for (Index e : list) {
        if (e >= space.size()) {
          issues.push_back("tile " + std::to_string(tile.id) + " holds out-of-range element " + std::to_string(e));
          continue;
        }
        ++hits[e];
        if (tile.region != Region::non_exec && space.region_of(e) == Region::non_exec)
          issues.push_back("non-exec element " + std::to_string(e) + " of loop " + std::to_string(loop.index) +
                           " scheduled in executable tile " + std::to_string(tile.id));
      }
    }
    for (std::size_t e = 0; e < hits.size(); ++e)
      if (hits[e] != 1)
        issues.push_back("loop " + std::to_string(loop.index) + " element " + std::to_string(e) + " appears " +
                         std::to_string(hits[e]) + " times");
  }
  return issues;
}

std::vector<std::string> check_regions(const Schedule& schedule, const LoopChain& chain) {
  std::vector<std::string> issues;
  int max_core = -1, min_boundary = -1, max_boundary = -1;
  std::size_t nonexec = 0;
  for (const auto& t : schedule.tiles) {
    if (t.region == Region::core) {
      max_core = std::max(max_core, t.color);
      for (const auto& loop : chain.loops())
        for (Index e : t.iterations.at(loop.index))
          if (chain.space_of(loop).region_of(e) != Region::core)
            issues.push_back("core tile " + std::to_string(t.id) + " holds " +
                             std::string(to_string(chain.space_of(loop).region_of(e))) + " element " +
                             std::to_string(e) + " of loop " + std::to_string(loop.index));
    } else if (t.region == Region::boundary) {
      min_boundary = min_boundary < 0 ? t.color : std::min(min_boundary, t.color);
      max_boundary = std::max(max_boundary, t.color);
    } else {
      ++nonexec;
    }
  }
  if (nonexec != 1 || schedule.tiles.empty() || schedule.tiles.back().region != Region::non_exec)
    issues.push_back("expected exactly one non-exec tile, placed last");
  if (min_boundary >= 0 && min_boundary <= max_core) issues.push_back("a boundary color does not exceed the core colors");
  if (!schedule.tiles.empty()) {
    const int ne = schedule.tiles.back().color;
    if (ne <= std::max(max_core, max_boundary)) issues.push_back("T_ne does not carry the highest color");
  }
  return issues;
}

std::vector<std::string> check_conflict_free(const Schedule& schedule, const LoopChain& chain) {
  std::vector<std::string> issues;
  // (space, element, color) -> first tile seen
  std::vector<std::map<std::pair<Index, int>, TileId>> seen(chain.spaces().size());
  for (const auto& t : schedule.tiles) {
    if (t.region == Region::non_exec) continue;
    for (const auto& loop : chain.loops())
      for (Index e : t.iterations.at(loop.index))
        for (const auto& a : loop.accesses) {
          const std::size_t n = a.is_direct() ? 1 : a.arity;
          for (std::size_t k = 0; k < n; ++k) {
            const Index x = a.is_direct() ? e : chain.map(static_cast<std::size_t>(a.map)).values[e * a.arity + k];
            auto [it, fresh] = seen[a.space].try_emplace({x, t.color}, t.id);
            if (!fresh && it->second != t.id)
              issues.push_back("tiles " + std::to_string(it->second) + " and " + std::to_string(t.id) + " (color " +
                               std::to_string(t.color) + ") both touch " + chain.space(a.space).name + " " +
                               std::to_string(x));
          }
        }
  }
  std::sort(issues.begin(), issues.end());
  issues.erase(std::unique(issues.begin(), issues.end()), issues.end());
  return issues;
}

std::vector<ValueMismatch> compare_datasets(const Datasets& expected, const Datasets& actual,
                                            const std::vector<std::string>& names, const CompareOptions& options,
                                            std::size_t* total) {
  std::vector<std::string> which = names;
  if (which.empty())
    for (const auto& [n, ds] : expected) which.push_back(n);
  std::vector<ValueMismatch> out;
  std::size_t count = 0;
  for (const auto& n : which) {
    const Dataset& a = expected.at(n);
    auto it = actual.find(n);
    if (it == actual.end() || it->second.values.size() != a.values.size()) {
      ++count;
      if (out.size() < options.max_reported) out.push_back({n, a.space, 0, 0, std::nan("")});
      continue;
    }
    const Dataset& b = it->second;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
      const double x = a.values[i], y = b.values[i];
      const bool same = options.tolerance == 0
                            ? x == y
                            : std::abs(x - y) <= options.tolerance * std::max({1.0, std::abs(x), std::abs(y)});
      if (same) continue;
      ++count;
      if (out.size() < options.max_reported) out.push_back({n, a.space, i / a.dim, x, y});
    }
  }
  if (total) *total = count;
  return out;
}

std::string format_mismatches(const std::vector<ValueMismatch>& mismatches, std::size_t total) {
  std::ostringstream os;
  os.precision(17);
  os << total << " value(s) differ";
  if (!mismatches.empty()) os << "; first " << mismatches.size() << ":";
  os << '\n';
  for (const auto& m : mismatches)
    os << "  " << m.dataset << " (" << m.space << ") element " << m.element << ": expected " << m.expected
       << ", got " << m.actual << '\n';
  return os.str();
}

bool corrupt_schedule(Schedule& schedule, const LoopChain& chain) {
  if (chain.size() == 0) return false;
  const std::size_t j = chain.size() - 1;
  Tile* low = nullptr;
  Tile* high = nullptr;
  for (auto& t : schedule.tiles) {
    if (t.region == Region::non_exec || t.iterations.at(j).empty()) continue;
    if (!low || t.color < low->color) low = &t;
    if (!high || t.color > high->color) high = &t;
  }
  if (!low || !high || low->color == high->color) return false;
  const Index e = high->iterations[j].front();
  high->iterations[j].erase(high->iterations[j].begin());
  auto& dst = low->iterations[j];
  dst.insert(std::upper_bound(dst.begin(), dst.end(), e), e);
  if (!low->local_maps.empty()) compute_local_maps(schedule.tiles, chain);
  return true;
}

} // namespace sparsetile
