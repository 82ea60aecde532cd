#include "sparsetile/executor.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <iomanip>
#include <sstream>
#include <thread>

#include "sparsetile/errors.hpp"

namespace sparsetile {

Dataset make_dataset(std::string name, const IterationSpace& space, std::size_t dim, double fill) {
  return Dataset{std::move(name), space.name, dim, std::vector<double>(space.size() * dim, fill)};
}

// ---------------------------------------------------------------------------
// KernelArgs

const KernelArgs::Slot& KernelArgs::checked(std::size_t arg, std::size_t k, AccessMode want) const {
  if (arg >= slots_.size()) throw ExecutionError("kernel argument index out of range");
  const Slot& s = slots_[arg];
  if (k >= s.arity) throw ExecutionError("kernel argument entry out of range");
  if (s.mode != want)
    throw ExecutionError("kernel accessed argument " + std::to_string(arg) + " declared '" +
                         std::string(to_string(s.mode)) + "' as '" + std::string(to_string(want)) + "'");
  return s;
}

Index KernelArgs::target(std::size_t arg, std::size_t k) const {
  const Slot& s = slots_.at(arg);
  return s.rows ? s.rows[row_offset_[arg] + k] : element_;
}

std::span<const double> KernelArgs::read(std::size_t arg, std::size_t k) const {
  const Slot& s = checked(arg, k, AccessMode::read);
  return {s.base + target(arg, k) * s.dim, s.dim};
}

std::span<double> KernelArgs::write(std::size_t arg, std::size_t k) const {
  const Slot& s = checked(arg, k, AccessMode::write);
  return {s.base + target(arg, k) * s.dim, s.dim};
}

void KernelArgs::inc(std::size_t arg, std::size_t k, std::size_t component, double value) const {
  const Slot& s = checked(arg, k, AccessMode::increment);
  if (component >= s.dim) throw ExecutionError("increment component out of range");
  s.base[target(arg, k) * s.dim + component] += value;
}

// ---------------------------------------------------------------------------
// Registry and bindings

void KernelRegistry::register_kernel(std::string id, std::vector<ArgSpec> args, KernelBody body) {
  if (kernels_.count(id)) throw RegistrationError("kernel '" + id + "' is already registered");
  if (!body) throw RegistrationError("kernel '" + id + "' has no body");
  Kernel k{id, std::move(args), std::move(body)};
  kernels_.emplace(std::move(id), std::move(k));
}

const Kernel& KernelRegistry::get(const std::string& id) const {
  auto it = kernels_.find(id);
  if (it == kernels_.end()) throw ExecutionError("kernel '" + id + "' is not registered");
  return it->second;
}

std::vector<std::string> KernelRegistry::ids() const {
  std::vector<std::string> out;
  for (const auto& [id, k] : kernels_) out.push_back(id);
  return out;
}

namespace {

const std::string& kernel_id(const Loop& loop, const KernelBinding& b) {
  return b.kernel.empty() ? loop.kernel : b.kernel;
}

} // namespace

void validate_bindings(const LoopChain& chain, const KernelRegistry& kernels, const Bindings& bindings,
                       const Datasets& data) {
  if (bindings.size() != chain.size())
    throw ExecutionError("expected " + std::to_string(chain.size()) + " kernel bindings, got " +
                         std::to_string(bindings.size()));
  for (const auto& loop : chain.loops()) {
    const KernelBinding& b = bindings[loop.index];
    const std::string where = "loop " + std::to_string(loop.index);
    const Kernel& k = kernels.get(kernel_id(loop, b));
    if (k.args.size() != loop.accesses.size() || b.args.size() != loop.accesses.size())
      throw ExecutionError(where + ": kernel '" + k.id + "' argument count does not match the descriptors");
    for (std::size_t d = 0; d < loop.accesses.size(); ++d) {
      const auto& access = loop.accesses[d];
      if (k.args[d].mode != access.mode || k.args[d].arity != access.arity)
        throw ExecutionError(where + ": kernel '" + k.id + "' argument " + std::to_string(d) +
                             " disagrees with its descriptor");
      auto it = data.find(b.args[d]);
      if (it == data.end()) throw ExecutionError(where + ": unknown dataset '" + b.args[d] + "'");
      const Dataset& ds = it->second;
      const IterationSpace& space = chain.space(access.space);
      if (ds.space != space.name)
        throw ExecutionError(where + ": dataset '" + ds.name + "' lives on '" + ds.space + "', descriptor needs '" +
                             space.name + "'");
      if (ds.dim == 0 || ds.values.size() != space.size() * ds.dim)
        throw ExecutionError(where + ": dataset '" + ds.name + "' is not sized to its space");
    }
  }
}

// ---------------------------------------------------------------------------

class LoopRunner {
public:
  LoopRunner(const Loop& loop, const std::vector<KernelArgs::Slot>& slots, const Kernel& kernel)
      : loop_(loop), kernel_(kernel) {
    args_.slots_ = slots;
    args_.row_offset_.assign(slots.size(), 0);
  }

  void run_global(std::span<const Index> elements) {
    for (std::size_t s = 0; s < args_.slots_.size(); ++s) args_.slots_[s].rows = global_rows(s);
    for (Index e : elements) {
      args_.element_ = e;
      for (std::size_t s = 0; s < args_.slots_.size(); ++s) args_.row_offset_[s] = e * args_.slots_[s].arity;
      kernel_.body(args_);
    }
  }

  void run_local(std::span<const Index> elements, const std::vector<std::vector<Index>>& local) {
    for (std::size_t s = 0; s < args_.slots_.size(); ++s) {
      if (loop_.accesses[s].is_direct()) {
        args_.slots_[s].rows = nullptr;
        continue;
      }
      if (s >= local.size() || local[s].size() != elements.size() * args_.slots_[s].arity)
        throw ExecutionError("local maps missing or stale for loop " + std::to_string(loop_.index));
      args_.slots_[s].rows = local[s].data();
    }
    for (std::size_t p = 0; p < elements.size(); ++p) {
      args_.element_ = elements[p];
      for (std::size_t s = 0; s < args_.slots_.size(); ++s) args_.row_offset_[s] = p * args_.slots_[s].arity;
      kernel_.body(args_);
    }
  }

  void set_global_rows(std::vector<const Index*> rows) { global_rows_ = std::move(rows); }

private:
  const Index* global_rows(std::size_t s) const { return global_rows_.empty() ? nullptr : global_rows_[s]; }

  const Loop& loop_;
  const Kernel& kernel_;
  KernelArgs args_;
  std::vector<const Index*> global_rows_;
};

namespace {

std::vector<KernelArgs::Slot> make_slots(const LoopChain& chain, const Loop& loop, const KernelBinding& b,
                                         Datasets& data) {
  std::vector<KernelArgs::Slot> slots;
  for (std::size_t d = 0; d < loop.accesses.size(); ++d) {
    const auto& access = loop.accesses[d];
    Dataset& ds = data.at(b.args[d]);
    KernelArgs::Slot s;
    s.base = ds.values.data();
    s.dim = ds.dim;
    s.mode = access.mode;
    s.arity = access.arity;
    s.rows = access.is_direct() ? nullptr : chain.map(static_cast<std::size_t>(access.map)).values.data();
    slots.push_back(s);
  }
  return slots;
}

std::vector<const Index*> rows_of(const std::vector<KernelArgs::Slot>& slots) {
  std::vector<const Index*> rows;
  for (const auto& s : slots) rows.push_back(s.rows);
  return rows;
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

} // namespace

std::size_t default_thread_count() {
  if (const char* env = std::getenv("SPARSETILE_THREADS")) {
    char* end = nullptr;
    long n = std::strtol(env, &end, 10);
    if (end != env && n > 0) return static_cast<std::size_t>(n);
  }
  return 1;
}

void execute_untiled(const LoopChain& chain, const KernelRegistry& kernels, const Bindings& bindings,
                     Datasets& data) {
  validate_bindings(chain, kernels, bindings, data);
  for (const auto& loop : chain.loops()) {
    auto slots = make_slots(chain, loop, bindings[loop.index], data);
    LoopRunner runner(loop, slots, kernels.get(kernel_id(loop, bindings[loop.index])));
    runner.set_global_rows(rows_of(slots));
    const std::size_t n = chain.space_of(loop).executable_size();
    std::vector<Index> all(n);
    for (std::size_t e = 0; e < n; ++e) all[e] = static_cast<Index>(e);
    runner.run_global(all);
  }
}

// ---------------------------------------------------------------------------
// ScheduleRun

ScheduleRun::ScheduleRun(const Schedule& schedule, const LoopChain& chain, const KernelRegistry& kernels,
                         const Bindings& bindings, Datasets& data, const ExecuteOptions& options)
    : schedule_(schedule), chain_(chain), options_(options) {
  if (schedule.fingerprint != chain_fingerprint(chain))
    throw StaleSchedule("schedule fingerprint " + schedule.fingerprint.hex() + " does not match the chain (" +
                        chain_fingerprint(chain).hex() + ")");
  validate_bindings(chain, kernels, bindings, data);
  if (options_.threads == 0) options_.threads = default_thread_count();
  for (const auto& loop : chain.loops()) {
    kernels_.push_back(&kernels.get(kernel_id(loop, bindings[loop.index])));
    slots_.push_back(make_slots(chain, loop, bindings[loop.index], data));
  }
  report_.iterations_per_loop.assign(chain.size(), 0);
}

void ScheduleRun::start_exchange(HaloChannel* channel) {
  auto t0 = Clock::now();
  if (channel) {
    channel->begin();
    ++report_.exchanges;
  }
  report_.start_exchange_seconds += seconds_since(t0);
}

void ScheduleRun::finish_exchange(HaloChannel* channel) {
  auto t0 = Clock::now();
  if (channel) {
    channel->end();
    report_.bytes_exchanged += channel->bytes_last_exchange();
  }
  report_.wait_exchange_seconds += seconds_since(t0);
}

void ScheduleRun::run_core() {
  auto t0 = Clock::now();
  run_region(Region::core);
  report_.core_seconds += seconds_since(t0);
}

void ScheduleRun::run_boundary() {
  auto t0 = Clock::now();
  run_region(Region::boundary);
  report_.boundary_seconds += seconds_since(t0);
}

void ScheduleRun::run_region(Region region) {
  auto run_tile = [this](const Tile& tile) {
    for (const auto& loop : chain_.loops()) {
      if (loop.index >= tile.iterations.size()) continue;
      const auto& list = tile.iterations[loop.index];
      if (list.empty()) continue;
      LoopRunner runner(loop, slots_[loop.index], *kernels_[loop.index]);
      if (options_.use_local_maps) {
        if (loop.index >= tile.local_maps.size())
          throw ExecutionError("schedule carries no local maps; inspect with local maps enabled");
        runner.run_local(list, tile.local_maps[loop.index]);
      } else {
        runner.set_global_rows(rows_of(slots_[loop.index]));
        runner.run_global(list);
      }
    }
  };

  for (int color : schedule_.color_order) {
    std::vector<const Tile*> batch;
    for (const auto& t : schedule_.tiles)
      if (t.region == region && t.color == color) batch.push_back(&t);
    if (batch.empty()) continue;
    report_.tiles_per_color[color] += batch.size();
    for (const Tile* t : batch)
      for (std::size_t j = 0; j < t->iterations.size() && j < report_.iterations_per_loop.size(); ++j)
        report_.iterations_per_loop[j] += t->iterations[j].size();

    const std::size_t workers = std::min(options_.threads, batch.size());
    if (workers <= 1) {
      for (const Tile* t : batch) run_tile(*t);
      continue;
    }
    // same-colored tiles touch disjoint data, so workers need no locking
    std::vector<std::exception_ptr> errors(workers);
    {
      std::vector<std::jthread> pool;
      for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
          try {
            for (std::size_t i = w; i < batch.size(); i += workers) run_tile(*batch[i]);
          } catch (...) {
            errors[w] = std::current_exception();
          }
        });
    }
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
}

ExecutionReport execute_schedule(const Schedule& schedule, const LoopChain& chain, const KernelRegistry& kernels,
                                 const Bindings& bindings, Datasets& data, HaloChannel* exchange,
                                 const ExecuteOptions& options) {
  ScheduleRun run(schedule, chain, kernels, bindings, data, options);
  run.start_exchange(exchange);
  run.run_core();
  run.finish_exchange(exchange);
  run.run_boundary();
  return run.report();
}

// ---------------------------------------------------------------------------

std::string ExecutionReport::to_text() const {
  std::ostringstream os;
  os << std::scientific << std::setprecision(3);
  os << "execution report\n"
     << "  phase 1 start exchange: " << start_exchange_seconds << " s\n"
     << "  phase 2 core tiles:     " << core_seconds << " s\n"
     << "  phase 3 wait exchange:  " << wait_exchange_seconds << " s\n"
     << "  phase 4 boundary tiles: " << boundary_seconds << " s\n";
  os << "  exchanges: " << exchanges << " (" << bytes_exchanged << " bytes)\n";
  os << "  tiles per color:";
  for (const auto& [c, n] : tiles_per_color) os << ' ' << c << ':' << n;
  os << "\n  iterations per loop:";
  for (std::size_t n : iterations_per_loop) os << ' ' << n;
  os << '\n';
  return os.str();
}

std::string ExecutionReport::to_key_values(const std::string& prefix) const {
  std::ostringstream os;
  os << std::setprecision(9);
  os << prefix << "start_exchange_seconds=" << start_exchange_seconds << '\n'
     << prefix << "core_seconds=" << core_seconds << '\n'
     << prefix << "wait_exchange_seconds=" << wait_exchange_seconds << '\n'
     << prefix << "boundary_seconds=" << boundary_seconds << '\n'
     << prefix << "total_seconds=" << total_seconds() << '\n'
     << prefix << "exchanges=" << exchanges << '\n'
     << prefix << "bytes_exchanged=" << bytes_exchanged << '\n'
     << prefix << "colors=" << tiles_per_color.size() << '\n';
  for (std::size_t j = 0; j < iterations_per_loop.size(); ++j)
    os << prefix << "iterations_loop" << j << '=' << iterations_per_loop[j] << '\n';
  return os.str();
}

} // namespace sparsetile
