#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "sparsetile/chain.hpp"
#include "sparsetile/inspector.hpp"

namespace sparsetile {

/// Payload attached to an iteration space: `dim` reals per element.
struct Dataset {
  std::string name;
  std::string space;
  std::size_t dim = 1;
  std::vector<double> values;

  std::span<double> at(Index e) { return {values.data() + e * dim, dim}; }
  std::span<const double> at(Index e) const { return {values.data() + e * dim, dim}; }
};

using Datasets = std::map<std::string, Dataset>;

Dataset make_dataset(std::string name, const IterationSpace& space, std::size_t dim, double fill = 0.0);

/// Per-iteration view handed to a kernel body: one argument per descriptor
/// of the loop. Direct arguments expose a single element (k = 0), indirect
/// ones `arity` elements. Access is checked against the descriptor mode:
/// read() only on read arguments, write() only on write arguments, inc()
/// only on increment arguments.
class KernelArgs {
public:
  struct Slot {
    double* base = nullptr;
    std::size_t dim = 1;
    AccessMode mode = AccessMode::read;
    std::size_t arity = 1;
    const Index* rows = nullptr; // null for direct
  };

  std::size_t size() const { return slots_.size(); }
  std::size_t arity(std::size_t arg) const { return slots_[arg].arity; }
  std::size_t dim(std::size_t arg) const { return slots_[arg].dim; }
  AccessMode mode(std::size_t arg) const { return slots_[arg].mode; }
  /// Iteration being executed (element of the loop's space).
  Index element() const { return element_; }
  /// Element of the argument's space reached through entry k.
  Index target(std::size_t arg, std::size_t k = 0) const;

  std::span<const double> read(std::size_t arg, std::size_t k = 0) const;
  std::span<double> write(std::size_t arg, std::size_t k = 0) const;
  void inc(std::size_t arg, std::size_t k, std::size_t component, double value) const;
  void inc(std::size_t arg, std::size_t k, double value) const { inc(arg, k, 0, value); }

private:
  friend class LoopRunner;
  const Slot& checked(std::size_t arg, std::size_t k, AccessMode want) const;
  std::vector<Slot> slots_;
  std::vector<std::size_t> row_offset_; // per slot: offset of the current row
  Index element_ = 0;
};

/// Expected mode and arity of one kernel argument.
struct ArgSpec {
  AccessMode mode = AccessMode::read;
  std::size_t arity = 1;
};

using KernelBody = std::function<void(const KernelArgs&)>;

struct Kernel {
  std::string id;
  std::vector<ArgSpec> args;
  KernelBody body;
};

class KernelRegistry {
public:
  /// Throws RegistrationError when `id` is already taken.
  void register_kernel(std::string id, std::vector<ArgSpec> args, KernelBody body);
  bool contains(const std::string& id) const { return kernels_.count(id) > 0; }
  const Kernel& get(const std::string& id) const; // throws ExecutionError
  std::vector<std::string> ids() const;

private:
  std::map<std::string, Kernel> kernels_;
};

/// Dataset per descriptor of one loop. An empty kernel id means the loop's.
struct KernelBinding {
  std::string kernel;
  std::vector<std::string> args;
};

using Bindings = std::vector<KernelBinding>; // one per loop

/// Throws ExecutionError unless every loop has a binding whose kernel is
/// registered and whose datasets sit on the right spaces with the right size.
void validate_bindings(const LoopChain& chain, const KernelRegistry& kernels, const Bindings& bindings,
                       const Datasets& data);

/// Reference semantics: loops in chain order, each over its executable
/// elements in ascending order.
void execute_untiled(const LoopChain& chain, const KernelRegistry& kernels, const Bindings& bindings,
                     Datasets& data);

/// Non-blocking halo exchange as seen by the executor.
class HaloChannel {
public:
  virtual ~HaloChannel() = default;
  virtual void begin() = 0;
  virtual void end() = 0;
  virtual std::size_t bytes_last_exchange() const { return 0; }
};

struct ExecuteOptions {
  bool use_local_maps = false;
  /// Worker threads for same-colored tiles; 0 reads SPARSETILE_THREADS (default 1).
  std::size_t threads = 0;
};

struct ExecutionReport {
  double start_exchange_seconds = 0;
  double core_seconds = 0;
  double wait_exchange_seconds = 0;
  double boundary_seconds = 0;
  std::map<int, std::size_t> tiles_per_color;
  std::vector<std::size_t> iterations_per_loop;
  std::size_t exchanges = 0;
  std::size_t bytes_exchanged = 0;

  double total_seconds() const {
    return start_exchange_seconds + core_seconds + wait_exchange_seconds + boundary_seconds;
  }
  std::string to_text() const;
  std::string to_key_values(const std::string& prefix = "") const;
};

/// Executes a schedule phase by phase: start exchange, core tiles by
/// ascending color, finish exchange, boundary tiles by ascending color. The
/// non-exec tile never runs. Phases are exposed individually so that several
/// virtual ranks can be advanced in lock-step.
class ScheduleRun {
public:
  /// Throws StaleSchedule when the schedule was built for another chain.
  ScheduleRun(const Schedule& schedule, const LoopChain& chain, const KernelRegistry& kernels,
              const Bindings& bindings, Datasets& data, const ExecuteOptions& options = {});

  void start_exchange(HaloChannel* channel);
  void run_core();
  void finish_exchange(HaloChannel* channel);
  void run_boundary();
  const ExecutionReport& report() const { return report_; }

private:
  void run_region(Region region);

  const Schedule& schedule_;
  const LoopChain& chain_;
  std::vector<const Kernel*> kernels_;
  std::vector<std::vector<KernelArgs::Slot>> slots_; // per loop
  ExecuteOptions options_;
  ExecutionReport report_;
};

ExecutionReport execute_schedule(const Schedule& schedule, const LoopChain& chain, const KernelRegistry& kernels,
                                 const Bindings& bindings, Datasets& data, HaloChannel* exchange = nullptr,
                                 const ExecuteOptions& options = {});

std::size_t default_thread_count();

} // namespace sparsetile
