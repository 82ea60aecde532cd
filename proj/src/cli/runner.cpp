#include <chrono>
#include <sstream>

#include "sparsetile/cli.hpp"
#include "sparsetile/errors.hpp"
#include "sparsetile/verify.hpp"

namespace sparsetile {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

} // namespace

Runner::Runner(RunConfig config) : config_(std::move(config)), mesh_(build_mesh(config_)), kernels_(builtin_kernels()) {}

LoopChain Runner::group_chain(const FusionGroup& g) const {
  return build_spec_chain(config_.chain, mesh_topology(mesh_), config_.depth, false, g.first, g.count);
}

std::size_t Runner::cache_hits() const {
  std::size_t n = cache_.hits();
  for (const auto& c : rank_caches_) n += c.hits();
  return n;
}

std::size_t Runner::cache_misses() const {
  std::size_t n = cache_.misses();
  for (const auto& c : rank_caches_) n += c.misses();
  return n;
}

Datasets Runner::reference() const {
  const LoopChain chain = group_chain({0, config_.chain.loops.size(), 1});
  Datasets data = make_spec_data(config_.chain, chain);
  execute_untiled(chain, kernels_, spec_bindings(config_.chain), data);
  return data;
}

RunOutcome Runner::run(const FusionScheme& scheme, bool corrupt) {
  const FusionScheme groups = resolve_fusion(config_, scheme.empty() ? config_.fusion : scheme);
  const InspectOptions iopts{config_.local_maps, 0};
  ExecuteOptions eopts;
  eopts.use_local_maps = config_.local_maps;
  RunOutcome out;

  if (config_.mode == InspectionMode::distributed) {
    if (corrupt) throw InvalidArgument("the schedule corruption hook needs sequential or shared mode");
    DistributedSimulation sim(mesh_, config_.chain, config_.ranks, config_.depth, &rank_caches_);
    const std::size_t whole = mesh_.num_cells + mesh_.num_edges + mesh_.num_vertices + 1;
    for (const auto& g : groups) {
      auto t0 = Clock::now();
      auto res = sim.run(g.first, g.count, g.ts ? g.ts : whole, kernels_, eopts, iopts);
      const double elapsed = seconds_since(t0);
      double exec = 0;
      for (std::size_t r = 0; r < res.reports.size(); ++r) {
        exec += res.reports[r].total_seconds();
        out.reports.push_back(res.reports[r]);
        if (g.ts) {
          std::ostringstream os;
          os << "rank " << r << ", loops " << g.first << ".." << g.first + g.count - 1 << ": "
             << inspection_summary(*res.schedules[r], sim.rank_chain(static_cast<int>(r), g.first, g.count));
          out.summaries.push_back(os.str());
        }
      }
      out.execute_seconds += exec;
      out.inspect_seconds += std::max(0.0, elapsed - exec);
    }
    out.data = sim.gather();
    return out;
  }

  const LoopChain full = group_chain({0, config_.chain.loops.size(), 1});
  out.data = make_spec_data(config_.chain, full);
  for (const auto& g : groups) {
    const LoopChain chain = group_chain(g);
    const Bindings bindings = spec_bindings(config_.chain, g.first, g.count);
    if (g.ts == 0) {
      auto t0 = Clock::now();
      execute_untiled(chain, kernels_, bindings, out.data);
      out.execute_seconds += seconds_since(t0);
      continue;
    }
    auto t0 = Clock::now();
    const Schedule& cached = cache_.get_or_inspect(chain, g.ts, config_.mode, iopts);
    out.inspect_seconds += seconds_since(t0);
    out.summaries.push_back("loops " + std::to_string(g.first) + ".." + std::to_string(g.first + g.count - 1) +
                            ": " + inspection_summary(cached, chain));
    const Schedule* schedule = &cached;
    Schedule broken;
    if (corrupt) {
      broken = cached;
      corrupt_schedule(broken, chain);
      schedule = &broken;
    }
    out.reports.push_back(execute_schedule(*schedule, chain, kernels_, bindings, out.data, nullptr, eopts));
    out.execute_seconds += out.reports.back().total_seconds();
  }
  return out;
}

std::vector<std::string> Runner::inspect_only(const FusionScheme& scheme) {
  const FusionScheme groups = resolve_fusion(config_, scheme.empty() ? config_.fusion : scheme);
  const InspectOptions iopts{config_.local_maps, 0};
  std::vector<std::string> out;
  if (config_.mode == InspectionMode::distributed) {
    DistributedSimulation sim(mesh_, config_.chain, config_.ranks, config_.depth, &rank_caches_);
    for (const auto& g : groups) {
      if (g.ts == 0) continue;
      for (int r = 0; r < config_.ranks; ++r) {
        const LoopChain chain = sim.rank_chain(r, g.first, g.count);
        const Schedule& s = rank_caches_[r].get_or_inspect(chain, g.ts, config_.mode, iopts);
        out.push_back("rank " + std::to_string(r) + ", loops " + std::to_string(g.first) + ".." +
                      std::to_string(g.first + g.count - 1) + ": " + inspection_summary(s, chain));
      }
    }
    return out;
  }
  for (const auto& g : groups) {
    if (g.ts == 0) continue;
    const LoopChain chain = group_chain(g);
    const Schedule& s = cache_.get_or_inspect(chain, g.ts, config_.mode, iopts);
    out.push_back("loops " + std::to_string(g.first) + ".." + std::to_string(g.first + g.count - 1) + ": " +
                  inspection_summary(s, chain));
  }
  return out;
}

std::string dump_datasets(const Datasets& data) {
  std::ostringstream os;
  os.precision(17);
  for (const auto& [name, ds] : data) {
    os << "dataset " << name << ' ' << ds.space << ' ' << ds.dim << ' ' << ds.values.size() / ds.dim << '\n';
    for (double v : ds.values) os << v << '\n';
  }
  return os.str();
}

} // namespace sparsetile
