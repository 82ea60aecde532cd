#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "sparsetile/chain.hpp"
#include "sparsetile/executor.hpp"

namespace sparsetile {

/// One kernel argument: the map it goes through (empty = direct), its mode
/// and the dataset bound to it.
struct ArgDecl {
  std::string map;
  AccessMode mode = AccessMode::read;
  std::string dataset;
};

struct LoopDecl {
  std::string space;
  std::string kernel;
  std::vector<ArgDecl> args;
};

enum class DatasetInit { zero, ramp };

struct DatasetDecl {
  std::string name;
  std::string space;
  std::size_t dim = 1;
  DatasetInit init = DatasetInit::zero;
};

/// A mesh-backed loop chain together with the data it runs on.
struct ChainSpec {
  std::string name;
  std::vector<LoopDecl> loops;
  std::vector<DatasetDecl> datasets;
};

inline constexpr std::size_t kAllLoops = std::numeric_limits<std::size_t>::max();

/// "fig2": edges increment vertices, cells increment vertices, edges read
/// vertices. "synthetic8": eight loops alternating edges and cells.
ChainSpec preset_chain(std::string_view name);
std::vector<std::string> preset_names();

/// edge_inc, cell_inc, edge_read, cell_gather.
void register_builtin_kernels(KernelRegistry& registry);
KernelRegistry builtin_kernels();

/// Chain over loops [first, first + count) of the spec on the given mesh
/// topology. Loop indices are renumbered from 0.
LoopChain build_spec_chain(const ChainSpec& spec, const MeshTopology& topology, std::size_t depth,
                           bool distributed = false, std::size_t first = 0, std::size_t count = kAllLoops);
Bindings spec_bindings(const ChainSpec& spec, std::size_t first = 0, std::size_t count = kAllLoops);

/// Datasets sized to the chain's spaces. Ramp values are small integers
/// derived from the global element id (`gids[space]`, identity when null),
/// so every rank sees the values the serial run sees.
Datasets make_spec_data(const ChainSpec& spec, const LoopChain& chain,
                        const std::array<std::vector<Index>, 3>* gids = nullptr);

/// Names of datasets some loop writes or increments, sorted.
std::vector<std::string> output_datasets(const ChainSpec& spec);

} // namespace sparsetile
