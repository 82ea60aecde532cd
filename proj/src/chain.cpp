#include "sparsetile/chain.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "sparsetile/errors.hpp"

namespace sparsetile {

std::string_view to_string(Region region) {
  switch (region) {
  case Region::core:
    return "core";
  case Region::boundary:
    return "boundary";
  case Region::non_exec:
    return "non_exec";
  }
  return "?";
}

std::string_view to_string(AccessMode mode) {
  switch (mode) {
  case AccessMode::read:
    return "r";
  case AccessMode::write:
    return "w";
  case AccessMode::increment:
    return "i";
  }
  return "?";
}

AccessMode parse_access_mode(std::string_view text) {
  if (text == "r" || text == "read") return AccessMode::read;
  if (text == "w" || text == "write") return AccessMode::write;
  if (text == "i" || text == "inc" || text == "increment") return AccessMode::increment;
  throw InvalidArgument("unknown access mode '" + std::string(text) + "'");
}

InverseMap invert_map(const MeshMap& map, std::size_t target_size) {
  InverseMap inv;
  inv.source = map.target;
  inv.target = map.source;
  inv.offsets.assign(target_size + 1, 0);
  for (Index v : map.values) {
    if (v >= target_size) throw InvalidArgument("invert_map: value out of range in map " + map.name);
    ++inv.offsets[v + 1];
  }
  for (std::size_t e = 0; e < target_size; ++e) inv.offsets[e + 1] += inv.offsets[e];
  inv.values.resize(map.values.size());
  std::vector<Index> fill(inv.offsets.begin(), inv.offsets.end() - 1);
  // sources are visited in ascending order, so every segment comes out sorted
  const std::size_t a = map.arity;
  for (std::size_t f = 0; a > 0 && f < map.values.size() / a; ++f)
    for (std::size_t k = 0; k < a; ++k) inv.values[fill[map.values[f * a + k]]++] = static_cast<Index>(f);
  return inv;
}

std::size_t LoopChain::space_index(std::string_view name) const {
  for (std::size_t i = 0; i < spaces_.size(); ++i)
    if (spaces_[i].name == name) return i;
  throw InvalidChain("unknown iteration space '" + std::string(name) + "'");
}

int LoopChain::map_index(std::string_view name) const {
  for (std::size_t i = 0; i < maps_.size(); ++i)
    if (maps_[i].name == name) return static_cast<int>(i);
  return -1;
}

LoopChain LoopChain::slice(std::size_t first, std::size_t count) const {
  if (count == 0 || first + count > loops_.size()) throw InvalidArgument("slice out of range");
  LoopChain sub = *this;
  sub.loops_.assign(loops_.begin() + first, loops_.begin() + first + count);
  for (std::size_t j = 0; j < sub.loops_.size(); ++j) sub.loops_[j].index = j;
  return sub;
}

LoopChain build_chain(std::vector<IterationSpace> spaces, std::vector<MeshMap> maps,
                      std::vector<LoopSpec> loops, std::size_t depth, bool distributed) {
  LoopChain chain;
  std::set<std::string> names;
  for (const auto& s : spaces)
    if (!names.insert(s.name).second) throw InvalidChain("duplicate iteration space '" + s.name + "'");
  chain.spaces_ = std::move(spaces);

  std::set<std::string> map_names;
  for (const auto& m : maps) {
    if (!map_names.insert(m.name).second) throw InvalidChain("duplicate map '" + m.name + "'");
    const auto& src = chain.spaces_[chain.space_index(m.source)];
    const auto& dst = chain.spaces_[chain.space_index(m.target)];
    if (m.arity == 0) throw InvalidChain("map '" + m.name + "' has arity 0");
    if (m.values.size() != src.size() * m.arity)
      throw InvalidChain("map '" + m.name + "' has " + std::to_string(m.values.size()) +
                         " values, expected |source| * arity = " + std::to_string(src.size() * m.arity));
    for (Index v : m.values)
      if (v >= dst.size()) throw InvalidChain("map '" + m.name + "' points outside its target space");
  }
  chain.maps_ = std::move(maps);

  if (loops.empty()) throw InvalidChain("a loop chain needs at least one loop");
  for (std::size_t j = 0; j < loops.size(); ++j) {
    auto& spec = loops[j];
    Loop loop;
    loop.index = j;
    loop.space = chain.space_index(spec.space);
    loop.kernel = spec.kernel;
    if (spec.descriptors.empty()) throw InvalidChain("loop " + std::to_string(j) + " has no descriptors");
    for (const auto& d : spec.descriptors) {
      Loop::Access access;
      access.mode = d.mode;
      if (d.is_direct()) {
        access.space = loop.space;
      } else {
        int mi = chain.map_index(d.map_name());
        if (mi < 0) throw InvalidChain("loop " + std::to_string(j) + " uses unknown map '" + d.map_name() + "'");
        const auto& m = chain.maps_[mi];
        if (m.source != spec.space)
          throw InvalidChain("loop " + std::to_string(j) + " over '" + spec.space + "' uses map '" + m.name +
                             "' whose source is '" + m.source + "'");
        access.map = mi;
        access.space = chain.space_index(m.target);
        access.arity = m.arity;
      }
      loop.accesses.push_back(access);
    }
    loop.descriptors = std::move(spec.descriptors);
    chain.loops_.push_back(std::move(loop));
  }
  if (depth < 1) throw InvalidChain("depth must be >= 1");
  if (distributed && chain.loops_.size() > depth)
    throw DepthExceeded(std::to_string(chain.loops_.size()) + " loops exceed the halo depth " +
                        std::to_string(depth) + "; split the chain");
  chain.depth_ = depth;
  return chain;
}

ChainBuilder& ChainBuilder::set(std::string name, std::size_t core, std::size_t boundary, std::size_t nonexec) {
  spaces_.push_back({std::move(name), core, boundary, nonexec});
  return *this;
}

ChainBuilder& ChainBuilder::map(std::string name, std::string source, std::string target, std::size_t arity,
                                std::vector<Index> values) {
  maps_.push_back({std::move(name), std::move(source), std::move(target), arity, std::move(values)});
  return *this;
}

ChainBuilder& ChainBuilder::loop(std::string space, std::string kernel, std::vector<Descriptor> descriptors) {
  loops_.push_back({std::move(space), std::move(descriptors), std::move(kernel)});
  return *this;
}

LoopChain ChainBuilder::build(std::size_t depth, bool distributed) const {
  return build_chain(spaces_, maps_, loops_, depth, distributed);
}

// ---------------------------------------------------------------------------

namespace {

class Fnv1a {
public:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h_ ^= p[i];
      h_ *= 0x100000001b3ULL;
    }
  }
  void u64(std::uint64_t x) { bytes(&x, sizeof x); }
  void str(std::string_view s) {
    u64(s.size());
    bytes(s.data(), s.size());
  }
  std::uint64_t value() const { return h_; }

private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

} // namespace

std::string Fingerprint::hex() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

Fingerprint chain_fingerprint(const LoopChain& chain) {
  Fnv1a h;
  h.u64(chain.spaces().size());
  for (const auto& s : chain.spaces()) {
    h.str(s.name);
    h.u64(s.core_size);
    h.u64(s.boundary_size);
    h.u64(s.nonexec_size);
  }
  h.u64(chain.maps().size());
  for (const auto& m : chain.maps()) {
    h.str(m.name);
    h.str(m.source);
    h.str(m.target);
    h.u64(m.arity);
    h.u64(m.values.size());
    h.bytes(m.values.data(), m.values.size() * sizeof(Index));
  }
  h.u64(chain.loops().size());
  for (const auto& l : chain.loops()) {
    h.u64(l.space);
    h.str(l.kernel);
    h.u64(l.descriptors.size());
    for (const auto& d : l.descriptors) {
      h.str(d.is_direct() ? std::string_view{"<direct>"} : std::string_view{d.map_name()});
      h.u64(static_cast<std::uint64_t>(d.mode));
    }
  }
  h.u64(chain.depth());
  return {h.value()};
}

// ---------------------------------------------------------------------------

MeshTopology mesh_topology(const Mesh& mesh) {
  MeshTopology t;
  t.spaces = {{"cells", mesh.num_cells, 0, 0}, {"edges", mesh.num_edges, 0, 0}, {"verts", mesh.num_vertices, 0, 0}};
  t.maps = {{"c2v", "cells", "verts", 3, mesh.cells_to_vertices}, {"e2v", "edges", "verts", 2, mesh.edges_to_vertices}};
  return t;
}

MeshTopology mesh_topology(const LocalMesh& local) {
  MeshTopology t;
  for (MeshSpace s : kMeshSpaces) {
    const auto& r = local.region(s);
    t.spaces.push_back({std::string(space_name(s)), r.core, r.boundary(), r.non_exec});
  }
  t.maps = {{"c2v", "cells", "verts", 3, local.cells_to_vertices}, {"e2v", "edges", "verts", 2, local.edges_to_vertices}};
  return t;
}

} // namespace sparsetile
