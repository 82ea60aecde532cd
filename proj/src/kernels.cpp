#include "sparsetile/kernels.hpp"

#include <algorithm>
#include <set>

#include "sparsetile/errors.hpp"

namespace sparsetile {

namespace {

ArgDecl direct(AccessMode mode, std::string ds) { return {"", mode, std::move(ds)}; }
ArgDecl via(std::string map, AccessMode mode, std::string ds) { return {std::move(map), mode, std::move(ds)}; }

constexpr auto R = AccessMode::read;
constexpr auto W = AccessMode::write;
constexpr auto I = AccessMode::increment;

std::pair<std::size_t, std::size_t> clamp_range(std::size_t n, std::size_t first, std::size_t count) {
  if (first >= n) throw InvalidArgument("loop range starts past the end of the chain");
  return {first, std::min(count, n - first)};
}

} // namespace

ChainSpec preset_chain(std::string_view name) {
  ChainSpec s;
  s.name = std::string(name);
  if (name == "fig2") {
    s.loops = {
        {"edges", "edge_inc", {direct(R, "edat"), via("e2v", I, "vdat")}},
        {"cells", "cell_inc", {direct(R, "cdat"), via("c2v", I, "vdat")}},
        {"edges", "edge_read", {direct(W, "odat"), via("e2v", R, "vdat")}},
    };
    s.datasets = {{"edat", "edges", 1, DatasetInit::ramp},
                  {"cdat", "cells", 1, DatasetInit::ramp},
                  {"vdat", "verts", 1, DatasetInit::zero},
                  {"odat", "edges", 1, DatasetInit::zero}};
    return s;
  }
  if (name == "synthetic8") {
    s.loops = {
        {"edges", "edge_inc", {direct(R, "edat"), via("e2v", I, "vdat")}},
        {"cells", "cell_inc", {direct(R, "cdat"), via("c2v", I, "vdat")}},
        {"edges", "edge_read", {direct(W, "odat"), via("e2v", R, "vdat")}},
        {"cells", "cell_gather", {direct(W, "cw"), via("c2v", R, "vdat")}},
        {"edges", "edge_inc", {direct(R, "odat"), via("e2v", I, "wdat")}},
        {"cells", "cell_inc", {direct(R, "cw"), via("c2v", I, "wdat")}},
        {"edges", "edge_read", {direct(W, "o2dat"), via("e2v", R, "wdat")}},
        {"cells", "cell_gather", {direct(W, "c3dat"), via("c2v", R, "wdat")}},
    };
    s.datasets = {{"edat", "edges", 1, DatasetInit::ramp}, {"cdat", "cells", 1, DatasetInit::ramp},
                  {"vdat", "verts", 1, DatasetInit::ramp}, {"wdat", "verts", 1, DatasetInit::zero},
                  {"odat", "edges", 1, DatasetInit::zero}, {"o2dat", "edges", 1, DatasetInit::zero},
                  {"cw", "cells", 1, DatasetInit::zero},   {"c3dat", "cells", 1, DatasetInit::zero}};
    return s;
  }
  throw InvalidArgument("unknown chain preset '" + s.name + "'");
}

std::vector<std::string> preset_names() { return {"fig2", "synthetic8"}; }

void register_builtin_kernels(KernelRegistry& registry) {
  registry.register_kernel("edge_inc", {{R, 1}, {I, 2}}, [](const KernelArgs& a) {
    const double x = a.read(0)[0];
    a.inc(1, 0, x);
    a.inc(1, 1, x);
  });
  registry.register_kernel("cell_inc", {{R, 1}, {I, 3}}, [](const KernelArgs& a) {
    const double x = a.read(0)[0];
    for (std::size_t k = 0; k < 3; ++k) a.inc(1, k, x);
  });
  registry.register_kernel("edge_read", {{W, 1}, {R, 2}},
                           [](const KernelArgs& a) { a.write(0)[0] = a.read(1, 0)[0] + a.read(1, 1)[0]; });
  registry.register_kernel("cell_gather", {{W, 1}, {R, 3}}, [](const KernelArgs& a) {
    a.write(0)[0] = a.read(1, 0)[0] + a.read(1, 1)[0] + a.read(1, 2)[0];
  });
}

KernelRegistry builtin_kernels() {
  KernelRegistry r;
  register_builtin_kernels(r);
  return r;
}

LoopChain build_spec_chain(const ChainSpec& spec, const MeshTopology& topology, std::size_t depth,
                           bool distributed, std::size_t first, std::size_t count) {
  auto [lo, n] = clamp_range(spec.loops.size(), first, count);
  std::vector<LoopSpec> loops;
  for (std::size_t j = lo; j < lo + n; ++j) {
    const auto& decl = spec.loops[j];
    LoopSpec l{decl.space, {}, decl.kernel};
    for (const auto& a : decl.args) {
      Descriptor d;
      if (!a.map.empty()) d.map = a.map;
      d.mode = a.mode;
      l.descriptors.push_back(std::move(d));
    }
    loops.push_back(std::move(l));
  }
  return build_chain(topology.spaces, topology.maps, std::move(loops), depth, distributed);
}

Bindings spec_bindings(const ChainSpec& spec, std::size_t first, std::size_t count) {
  auto [lo, n] = clamp_range(spec.loops.size(), first, count);
  Bindings b;
  for (std::size_t j = lo; j < lo + n; ++j) {
    KernelBinding kb{spec.loops[j].kernel, {}};
    for (const auto& a : spec.loops[j].args) kb.args.push_back(a.dataset);
    b.push_back(std::move(kb));
  }
  return b;
}

Datasets make_spec_data(const ChainSpec& spec, const LoopChain& chain, const std::array<std::vector<Index>, 3>* gids) {
  Datasets data;
  for (std::size_t d = 0; d < spec.datasets.size(); ++d) {
    const auto& decl = spec.datasets[d];
    if (data.count(decl.name)) throw InvalidArgument("duplicate dataset '" + decl.name + "'");
    const IterationSpace& space = chain.space(chain.space_index(decl.space));
    Dataset ds = make_dataset(decl.name, space, decl.dim);
    if (decl.init == DatasetInit::ramp) {
      const std::vector<Index>* ids = nullptr;
      if (gids)
        for (MeshSpace ms : kMeshSpaces)
          if (space_name(ms) == decl.space) ids = &(*gids)[static_cast<int>(ms)];
      for (std::size_t e = 0; e < space.size(); ++e) {
        const std::size_t g = ids ? (*ids)[e] : e;
        for (std::size_t c = 0; c < decl.dim; ++c)
          ds.values[e * decl.dim + c] = static_cast<double>((g * 7 + d * 3 + c * 5) % 13 + 1);
      }
    }
    data.emplace(decl.name, std::move(ds));
  }
  return data;
}

std::vector<std::string> output_datasets(const ChainSpec& spec) {
  std::set<std::string> out;
  for (const auto& l : spec.loops)
    for (const auto& a : l.args)
      if (writes(a.mode)) out.insert(a.dataset);
  return {out.begin(), out.end()};
}

} // namespace sparsetile
