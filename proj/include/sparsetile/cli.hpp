#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "sparsetile/distsim.hpp"
#include "sparsetile/executor.hpp"
#include "sparsetile/inspector.hpp"
#include "sparsetile/kernels.hpp"
#include "sparsetile/mesh.hpp"

namespace sparsetile {

/// Loops [first, first + count) fused with seed tile size ts.
struct FusionGroup {
  std::size_t first = 0;
  std::size_t count = 1;
  std::size_t ts = 1;
};

using FusionScheme = std::vector<FusionGroup>;

struct RunConfig {
  std::size_t nx = 8;
  std::size_t ny = 4;
  bool renumber = false;
  ChainSpec chain;
  FusionScheme fusion; // empty: every loop fused into one chain with tile_size
  std::map<std::string, FusionScheme> schemes; // named alternatives for sweep
  InspectionMode mode = InspectionMode::shared;
  int ranks = 1;
  std::size_t depth = 3;
  std::size_t tile_size = 16;
  bool local_maps = false;
  std::string report_path;
  std::string summary_path;
  std::string vtk_path;
  std::string data_path;
};

/// Parses the YAML config. Throws ConfigError carrying "origin:line: ..."
/// diagnostics.
RunConfig parse_config(const std::string& text, const std::string& origin = "<config>");
RunConfig load_config(const std::string& path);

/// The configured fusion scheme with gaps filled by unfused single loops
/// (ts = 0 marks a loop that runs untiled). Throws ConfigError when groups
/// overlap, are out of order or leave the chain, and DepthExceeded when a
/// distributed group is longer than the depth.
FusionScheme resolve_fusion(const RunConfig& config, const FusionScheme& scheme);

Mesh build_mesh(const RunConfig& config);

struct RunOutcome {
  Datasets data; // global values (gathered in distributed mode)
  std::vector<ExecutionReport> reports; // per group (per rank and group when distributed)
  std::vector<std::string> summaries;   // per inspection performed or reused
  double inspect_seconds = 0;
  double execute_seconds = 0;
};

/// Runs configs while keeping inspections cached across calls.
class Runner {
public:
  explicit Runner(RunConfig config);

  const RunConfig& config() const { return config_; }
  const Mesh& mesh() const { return mesh_; }

  /// Executes the config with `scheme` (the configured one when empty).
  /// `corrupt` applies the schedule-corruption test hook to every tiled group.
  RunOutcome run(const FusionScheme& scheme = {}, bool corrupt = false);
  /// Untiled serial execution of the whole chain on the global mesh.
  Datasets reference() const;
  /// Inspects every fused group without executing.
  std::vector<std::string> inspect_only(const FusionScheme& scheme = {});

  std::size_t cache_hits() const;
  std::size_t cache_misses() const;

private:
  LoopChain group_chain(const FusionGroup& g) const;

  RunConfig config_;
  Mesh mesh_;
  KernelRegistry kernels_;
  ScheduleCache cache_;
  std::vector<ScheduleCache> rank_caches_;
};

/// Plain-text dump: one "dataset <name> <space> <dim> <n>" header line
/// followed by one value per line.
std::string dump_datasets(const Datasets& data);

enum ExitCode : int { kExitOk = 0, kExitError = 1, kExitConfig = 2, kExitVerify = 3, kExitDepth = 4 };

/// Entry point of the command-line tool.
int cli_main(int argc, char** argv, std::ostream& out, std::ostream& err);

} // namespace sparsetile
