#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "sparsetile/chain.hpp"
#include "sparsetile/executor.hpp"
#include "sparsetile/inspector.hpp"
#include "sparsetile/kernels.hpp"
#include "sparsetile/mesh.hpp"

namespace sparsetile {

/// Throws PartitionBug unless, for every pair of ranks and every space, the
/// two exchange tables list the same elements (by global id) in the same
/// order with `here` and `there` swapped.
void check_exchange_symmetry(const std::vector<LocalMesh>& locals);

class HaloNetwork;

/// One rank's side of the in-process halo exchange. begin() stages the
/// values of locally owned elements for every neighbor, end() commits the
/// values neighbors staged for this rank into its halo slots.
class HaloEndpoint : public HaloChannel {
public:
  HaloEndpoint(HaloNetwork& network, int rank) : network_(&network), rank_(rank) {}

  void begin() override;
  void end() override;
  std::size_t bytes_last_exchange() const override { return bytes_last_; }

  int rank() const { return rank_; }
  std::size_t exchanges() const { return exchanges_; }
  /// Datasets moved by the next exchange.
  void set_datasets(std::vector<std::string> names) { names_ = std::move(names); }

private:
  HaloNetwork* network_;
  int rank_;
  bool open_ = false;
  std::size_t exchanges_ = 0;
  std::size_t bytes_last_ = 0;
  std::vector<std::string> names_;
};

/// Mailboxes between the endpoints of all ranks.
class HaloNetwork {
public:
  /// `data[r]` is rank r's dataset collection; it must outlive the network.
  HaloNetwork(const std::vector<LocalMesh>& locals, std::vector<Datasets*> data);

  HaloEndpoint& endpoint(int rank) { return endpoints_.at(static_cast<std::size_t>(rank)); }
  std::size_t size() const { return endpoints_.size(); }

private:
  friend class HaloEndpoint;
  struct Message {
    std::string dataset;
    MeshSpace space;
    std::vector<Index> slots; // receiver-local indices
    std::vector<double> values;
    std::size_t dim = 1;
  };

  const std::vector<LocalMesh>* locals_;
  std::vector<Datasets*> data_;
  std::vector<HaloEndpoint> endpoints_;
  std::vector<std::vector<Message>> inbox_; // per receiving rank
};

/// Runs one complete exchange: begin on every endpoint, then end on every
/// endpoint.
void halo_exchange(HaloNetwork& network);

struct VirtualRank {
  int rank = 0;
  LocalMesh mesh;
  Datasets data;
};

struct SubChainResult {
  std::vector<ExecutionReport> reports; // per rank
  std::vector<const Schedule*> schedules; // per rank, owned by the rank caches
};

/// N virtual ranks in one process. Sub-chains of the spec run one after the
/// other; each starts with one halo exchange and advances all ranks in
/// lock-step through the four executor phases.
class DistributedSimulation {
public:
  /// `caches`, when given, holds one schedule cache per rank and outlives
  /// the simulation, so that later simulations reuse its inspections.
  DistributedSimulation(const Mesh& mesh, ChainSpec spec, int nranks, std::size_t depth,
                        std::vector<ScheduleCache>* caches = nullptr);

  const std::vector<VirtualRank>& ranks() const { return ranks_; }
  std::size_t depth() const { return depth_; }

  /// Per-rank chain of loops [first, first + count), distributed mode.
  LoopChain rank_chain(int rank, std::size_t first, std::size_t count) const;

  /// Inspects (cached per rank) and executes loops [first, first + count).
  /// Throws DepthExceeded when count > depth.
  SubChainResult run(std::size_t first, std::size_t count, std::size_t ts, const KernelRegistry& kernels,
                     const ExecuteOptions& options = {}, const InspectOptions& inspect_options = {});

  /// Exchanges performed so far by each rank's endpoint.
  std::vector<std::size_t> exchanges() const;

  /// Global datasets assembled from core and owned elements. Throws
  /// PartitionBug when an element has no owner or more than one.
  Datasets gather() const;

private:
  ChainSpec spec_;
  std::size_t depth_;
  std::array<std::size_t, 3> global_sizes_{};
  std::vector<VirtualRank> ranks_;
  std::vector<LocalMesh> mesh_views_;
  std::unique_ptr<HaloNetwork> network_;
  std::vector<ScheduleCache> own_caches_;
  std::vector<ScheduleCache>* caches_;
};

struct DistributedResult {
  Datasets gathered;
  std::vector<ExecutionReport> reports;
  std::vector<std::size_t> exchanges;
};

/// Whole spec as a single fused chain over nranks ranks.
DistributedResult run_distributed(const Mesh& mesh, const ChainSpec& spec, const KernelRegistry& kernels,
                                  int nranks, std::size_t ts, std::size_t depth,
                                  const ExecuteOptions& options = {});

} // namespace sparsetile
