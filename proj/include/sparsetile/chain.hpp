#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sparsetile/mesh.hpp"

namespace sparsetile {

enum class Region : std::uint8_t { core, boundary, non_exec };

std::string_view to_string(Region region);

/// A named set of iteration identifiers 0..size()-1, split into three
/// contiguous regions: core, then boundary, then non-exec.
struct IterationSpace {
  std::string name;
  std::size_t core_size = 0;
  std::size_t boundary_size = 0;
  std::size_t nonexec_size = 0;

  std::size_t size() const { return core_size + boundary_size + nonexec_size; }
  std::size_t executable_size() const { return core_size + boundary_size; }
  Region region_of(Index e) const {
    if (e < core_size) return Region::core;
    if (e < core_size + boundary_size) return Region::boundary;
    return Region::non_exec;
  }
};

/// Arity-a connectivity from every element of `source` to elements of
/// `target`; values holds |source| * arity entries, row-major.
struct MeshMap {
  std::string name;
  std::string source;
  std::string target;
  std::size_t arity = 0;
  std::vector<Index> values;
};

/// CSR inverse of a MeshMap: the segment offsets[e]..offsets[e+1] of
/// `values` lists, in ascending order and with repetitions, every element of
/// the original source whose row contains e.
struct InverseMap {
  std::string source; // original target
  std::string target; // original source
  std::vector<Index> offsets;
  std::vector<Index> values;
};

InverseMap invert_map(const MeshMap& map, std::size_t target_size);

enum class AccessMode : std::uint8_t { read, write, increment };

std::string_view to_string(AccessMode mode);
AccessMode parse_access_mode(std::string_view text); // "r" | "w" | "i" or full names

inline bool writes(AccessMode m) { return m != AccessMode::read; }

/// Placeholder for a direct access (the element itself, no map).
struct Direct {
  bool operator==(const Direct&) const = default;
};

struct Descriptor {
  std::variant<Direct, std::string> map; // map name when indirect
  AccessMode mode = AccessMode::read;

  bool is_direct() const { return std::holds_alternative<Direct>(map); }
  const std::string& map_name() const { return std::get<std::string>(map); }
};

struct LoopSpec {
  std::string space;
  std::vector<Descriptor> descriptors;
  std::string kernel;
};

/// A loop after validation: every name is resolved to an index into the
/// owning chain's spaces/maps.
struct Loop {
  struct Access {
    int map = -1; // -1 = direct
    AccessMode mode = AccessMode::read;
    std::size_t space = 0; // space whose elements are touched
    std::size_t arity = 1;
    bool is_direct() const { return map < 0; }
  };

  std::size_t index = 0;
  std::size_t space = 0;
  std::vector<Descriptor> descriptors;
  std::vector<Access> accesses; // parallel to descriptors
  std::string kernel;
};

class LoopChain {
public:
  const std::vector<IterationSpace>& spaces() const { return spaces_; }
  const std::vector<MeshMap>& maps() const { return maps_; }
  const std::vector<Loop>& loops() const { return loops_; }
  std::size_t depth() const { return depth_; }
  std::size_t size() const { return loops_.size(); }

  const IterationSpace& space(std::size_t i) const { return spaces_.at(i); }
  const MeshMap& map(std::size_t i) const { return maps_.at(i); }
  const IterationSpace& space_of(const Loop& loop) const { return spaces_.at(loop.space); }
  std::size_t space_index(std::string_view name) const; // throws InvalidChain
  int map_index(std::string_view name) const;           // -1 when absent

  /// The same spaces and maps with a contiguous sub-range of the loops.
  LoopChain slice(std::size_t first, std::size_t count) const;

private:
  friend LoopChain build_chain(std::vector<IterationSpace>, std::vector<MeshMap>,
                               std::vector<LoopSpec>, std::size_t, bool);
  std::vector<IterationSpace> spaces_;
  std::vector<MeshMap> maps_;
  std::vector<Loop> loops_;
  std::size_t depth_ = 1;
};

/// Validates and resolves a chain. Throws InvalidChain on dangling names,
/// duplicate space names, malformed maps, empty loop lists, loops without
/// descriptors or descriptors whose map does not start at the loop's space;
/// throws DepthExceeded when `distributed` and the loop count exceeds depth.
LoopChain build_chain(std::vector<IterationSpace> spaces, std::vector<MeshMap> maps,
                      std::vector<LoopSpec> loops, std::size_t depth, bool distributed = false);

/// Incremental construction mirroring the set/map/loop calls of an
/// inspector front end.
class ChainBuilder {
public:
  ChainBuilder& set(std::string name, std::size_t core, std::size_t boundary = 0, std::size_t nonexec = 0);
  ChainBuilder& map(std::string name, std::string source, std::string target, std::size_t arity,
                    std::vector<Index> values);
  ChainBuilder& loop(std::string space, std::string kernel, std::vector<Descriptor> descriptors);
  LoopChain build(std::size_t depth = 1, bool distributed = false) const;

private:
  std::vector<IterationSpace> spaces_;
  std::vector<MeshMap> maps_;
  std::vector<LoopSpec> loops_;
};

/// Deterministic 64-bit structural digest (spaces, region sizes, map values,
/// loops and descriptors in order, depth).
struct Fingerprint {
  std::uint64_t value = 0;
  bool operator==(const Fingerprint&) const = default;
  auto operator<=>(const Fingerprint&) const = default;
  std::string hex() const;
};

Fingerprint chain_fingerprint(const LoopChain& chain);

// ---------------------------------------------------------------------------
// Mesh-backed chains

/// Spaces "cells", "edges", "verts" and maps "c2v" (arity 3), "e2v" (arity 2)
/// for a global mesh; every element is core.
struct MeshTopology {
  std::vector<IterationSpace> spaces;
  std::vector<MeshMap> maps;
};

MeshTopology mesh_topology(const Mesh& mesh);

/// Same for a rank-local mesh: core = core, boundary = owned + exec,
/// non-exec = non_exec.
MeshTopology mesh_topology(const LocalMesh& local);

} // namespace sparsetile
