#pragma once

#include <string>
#include <vector>

#include "sparsetile/chain.hpp"
#include "sparsetile/inspector.hpp"
#include "sparsetile/mesh.hpp"

namespace sparsetile {

/// Per-cell tile and color of the first loop of the chain that runs over
/// "cells". Throws InvalidArgument when no loop does.
struct CellTiling {
  std::vector<int> tile_id;
  std::vector<int> color;
};

CellTiling cell_tiling(const Schedule& schedule, const LoopChain& chain);

/// Legacy ASCII unstructured grid: POINTS, triangle CELLS (type 5) and the
/// integer cell fields "tile_id" and "color".
std::string vtk_text(const Mesh& mesh, const CellTiling& tiling);

/// Throws IoError when the file cannot be written.
void write_vtk(const std::string& path, const Mesh& mesh, const CellTiling& tiling);

} // namespace sparsetile
