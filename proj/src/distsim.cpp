#include "sparsetile/distsim.hpp"

#include <cmath>
#include <limits>
#include <set>

#include "sparsetile/errors.hpp"

namespace sparsetile {

namespace {

MeshSpace mesh_space_of(const std::string& name) {
  for (MeshSpace s : kMeshSpaces)
    if (space_name(s) == name) return s;
  throw InvalidArgument("'" + name + "' is not a mesh iteration space");
}

} // namespace

void check_exchange_symmetry(const std::vector<LocalMesh>& locals) {
  for (const auto& lm : locals)
    for (const auto& [key, pairs] : lm.exchange_table) {
      const auto [space, nb] = key;
      const std::string what = "exchange table " + std::string(space_name(space)) + " " +
                               std::to_string(lm.rank) + "<->" + std::to_string(nb);
      if (nb < 0 || nb >= static_cast<int>(locals.size()) || nb == lm.rank)
        throw PartitionBug(what + " names an invalid neighbor");
      const auto& other = locals[nb].exchange_table;
      auto it = other.find({space, lm.rank});
      if (it == other.end() || it->second.size() != pairs.size()) throw PartitionBug(what + " is not symmetric");
      const auto& mine = lm.gids(space);
      const auto& theirs = locals[nb].gids(space);
      for (std::size_t k = 0; k < pairs.size(); ++k) {
        const HaloPair& p = pairs[k];
        const HaloPair& q = it->second[k];
        if (p.here != q.there || p.there != q.here || p.here >= mine.size() || p.there >= theirs.size() ||
            mine[p.here] != theirs[p.there])
          throw PartitionBug(what + " disagrees at entry " + std::to_string(k));
      }
    }
}

HaloNetwork::HaloNetwork(const std::vector<LocalMesh>& locals, std::vector<Datasets*> data)
    : locals_(&locals), data_(std::move(data)), inbox_(locals.size()) {
  if (data_.size() != locals.size()) throw InvalidArgument("one dataset collection per rank expected");
  check_exchange_symmetry(locals);
  for (std::size_t r = 0; r < locals.size(); ++r) endpoints_.emplace_back(*this, static_cast<int>(r));
}

void HaloEndpoint::begin() {
  if (open_) throw ExecutionError("halo exchange begun twice on rank " + std::to_string(rank_));
  open_ = true;
  ++exchanges_;
  bytes_last_ = 0;
  const LocalMesh& lm = (*network_->locals_)[rank_];
  const Datasets& data = *network_->data_[rank_];
  for (const auto& name : names_) {
    const Dataset& ds = data.at(name);
    const MeshSpace space = mesh_space_of(ds.space);
    const std::size_t owned_end = lm.region(space).local_owned();
    for (const auto& [key, pairs] : lm.exchange_table) {
      if (key.first != space) continue;
      HaloNetwork::Message msg{name, space, {}, {}, ds.dim};
      for (const HaloPair& p : pairs) {
        if (p.here >= owned_end) continue;
        msg.slots.push_back(p.there);
        auto v = ds.at(p.here);
        msg.values.insert(msg.values.end(), v.begin(), v.end());
      }
      if (msg.slots.empty()) continue;
      bytes_last_ += msg.values.size() * sizeof(double);
      network_->inbox_[key.second].push_back(std::move(msg));
    }
  }
}

void HaloEndpoint::end() {
  if (!open_) throw ExecutionError("halo exchange ended without begin on rank " + std::to_string(rank_));
  open_ = false;
  Datasets& data = *network_->data_[rank_];
  auto& inbox = network_->inbox_[rank_];
  for (const auto& msg : inbox) {
    Dataset& ds = data.at(msg.dataset);
    for (std::size_t k = 0; k < msg.slots.size(); ++k)
      for (std::size_t c = 0; c < msg.dim; ++c) ds.values[msg.slots[k] * msg.dim + c] = msg.values[k * msg.dim + c];
  }
  inbox.clear();
}

void halo_exchange(HaloNetwork& network) {
  for (std::size_t r = 0; r < network.size(); ++r) network.endpoint(static_cast<int>(r)).begin();
  for (std::size_t r = 0; r < network.size(); ++r) network.endpoint(static_cast<int>(r)).end();
}

// ---------------------------------------------------------------------------

DistributedSimulation::DistributedSimulation(const Mesh& mesh, ChainSpec spec, int nranks, std::size_t depth,
                                             std::vector<ScheduleCache>* caches)
    : spec_(std::move(spec)), depth_(depth), caches_(caches ? caches : &own_caches_) {
  caches_->resize(std::max<std::size_t>(caches_->size(), static_cast<std::size_t>(std::max(nranks, 0))));
  for (MeshSpace s : kMeshSpaces) global_sizes_[static_cast<int>(s)] = mesh.size(s);
  auto locals = partition_for_ranks(mesh, nranks, depth);
  for (auto& lm : locals) {
    VirtualRank vr;
    vr.rank = lm.rank;
    vr.mesh = std::move(lm);
    const LoopChain chain = build_spec_chain(spec_, mesh_topology(vr.mesh), depth_);
    vr.data = make_spec_data(spec_, chain, &vr.mesh.global_ids);
    // halo values only ever arrive through the exchange
    for (auto& [name, ds] : vr.data) {
      const std::size_t owned_end = vr.mesh.region(mesh_space_of(ds.space)).local_owned();
      std::fill(ds.values.begin() + owned_end * ds.dim, ds.values.end(), std::numeric_limits<double>::quiet_NaN());
    }
    ranks_.push_back(std::move(vr));
  }
  mesh_views_.reserve(ranks_.size());
  for (const auto& vr : ranks_) mesh_views_.push_back(vr.mesh);
  std::vector<Datasets*> data;
  for (auto& vr : ranks_) data.push_back(&vr.data);
  network_ = std::make_unique<HaloNetwork>(mesh_views_, std::move(data));
}

LoopChain DistributedSimulation::rank_chain(int rank, std::size_t first, std::size_t count) const {
  return build_spec_chain(spec_, mesh_topology(ranks_.at(rank).mesh), depth_, true, first, count);
}

SubChainResult DistributedSimulation::run(std::size_t first, std::size_t count, std::size_t ts,
                                          const KernelRegistry& kernels, const ExecuteOptions& options,
                                          const InspectOptions& inspect_options) {
  std::set<std::string> moved;
  for (std::size_t j = first; j < first + count && j < spec_.loops.size(); ++j)
    for (const auto& a : spec_.loops[j].args)
      if (a.mode != AccessMode::write) moved.insert(a.dataset);
  const Bindings bindings = spec_bindings(spec_, first, count);

  std::vector<LoopChain> chains;
  SubChainResult result;
  for (const auto& vr : ranks_) {
    chains.push_back(rank_chain(vr.rank, first, count));
    result.schedules.push_back(
        &(*caches_)[vr.rank].get_or_inspect(chains.back(), ts, InspectionMode::distributed, inspect_options));
  }
  std::vector<std::unique_ptr<ScheduleRun>> runs;
  for (auto& vr : ranks_) {
    runs.push_back(std::make_unique<ScheduleRun>(*result.schedules[vr.rank], chains[vr.rank], kernels, bindings,
                                                 vr.data, options));
    network_->endpoint(vr.rank).set_datasets({moved.begin(), moved.end()});
  }
  for (std::size_t r = 0; r < runs.size(); ++r) runs[r]->start_exchange(&network_->endpoint(static_cast<int>(r)));
  for (auto& run : runs) run->run_core();
  for (std::size_t r = 0; r < runs.size(); ++r) runs[r]->finish_exchange(&network_->endpoint(static_cast<int>(r)));
  for (auto& run : runs) run->run_boundary();
  for (auto& run : runs) result.reports.push_back(run->report());
  return result;
}

std::vector<std::size_t> DistributedSimulation::exchanges() const {
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < ranks_.size(); ++r) out.push_back(network_->endpoint(static_cast<int>(r)).exchanges());
  return out;
}

Datasets DistributedSimulation::gather() const {
  Datasets out;
  for (const auto& [name, proto] : ranks_.front().data) {
    const MeshSpace space = mesh_space_of(proto.space);
    const std::size_t n = global_sizes_[static_cast<int>(space)];
    Dataset g{name, proto.space, proto.dim, std::vector<double>(n * proto.dim, 0.0)};
    std::vector<char> seen(n, 0);
    for (const auto& vr : ranks_) {
      const Dataset& ds = vr.data.at(name);
      const auto& gids = vr.mesh.gids(space);
      for (std::size_t e = 0; e < vr.mesh.region(space).local_owned(); ++e) {
        const Index gid = gids[e];
        if (gid >= n || seen[gid])
          throw PartitionBug(std::string(space_name(space)) + " element " + std::to_string(gid) +
                             " owned by more than one rank");
        seen[gid] = 1;
        std::copy_n(ds.values.begin() + e * ds.dim, ds.dim, g.values.begin() + gid * ds.dim);
      }
    }
    for (std::size_t gid = 0; gid < n; ++gid)
      if (!seen[gid])
        throw PartitionBug(std::string(space_name(space)) + " element " + std::to_string(gid) + " has no owner");
    out.emplace(name, std::move(g));
  }
  return out;
}

DistributedResult run_distributed(const Mesh& mesh, const ChainSpec& spec, const KernelRegistry& kernels,
                                  int nranks, std::size_t ts, std::size_t depth, const ExecuteOptions& options) {
  if (spec.loops.size() > depth)
    throw DepthExceeded(std::to_string(spec.loops.size()) + " loops exceed the halo depth " + std::to_string(depth) +
                        "; split the chain");
  DistributedSimulation sim(mesh, spec, nranks, depth);
  DistributedResult out;
  out.reports = sim.run(0, spec.loops.size(), ts, kernels, options).reports;
  out.gathered = sim.gather();
  out.exchanges = sim.exchanges();
  return out;
}

} // namespace sparsetile
