#include "sparsetile/vtk.hpp"

#include <fstream>
#include <sstream>

#include "sparsetile/errors.hpp"

namespace sparsetile {

CellTiling cell_tiling(const Schedule& schedule, const LoopChain& chain) {
  for (const auto& loop : chain.loops()) {
    if (chain.space_of(loop).name != space_name(MeshSpace::cells)) continue;
    CellTiling out;
    const std::size_t n = chain.space_of(loop).size();
    out.tile_id.assign(n, -1);
    out.color.assign(n, -1);
    for (const auto& t : schedule.tiles)
      for (Index e : t.iterations.at(loop.index)) {
        out.tile_id.at(e) = t.id;
        out.color.at(e) = t.color;
      }
    return out;
  }
  throw InvalidArgument("no loop of the chain runs over cells; nothing to color");
}

std::string vtk_text(const Mesh& mesh, const CellTiling& tiling) {
  if (tiling.tile_id.size() != mesh.num_cells || tiling.color.size() != mesh.num_cells)
    throw InvalidArgument("cell tiling does not match the mesh");
  std::ostringstream os;
  os.precision(17);
  os << "# vtk DataFile Version 3.0\nsparse tiling\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  os << "POINTS " << mesh.num_vertices << " double\n";
  for (const auto& p : mesh.vertex_coords) os << p[0] << ' ' << p[1] << " 0\n";
  os << "CELLS " << mesh.num_cells << ' ' << 4 * mesh.num_cells << '\n';
  for (std::size_t c = 0; c < mesh.num_cells; ++c)
    os << "3 " << mesh.cells_to_vertices[3 * c] << ' ' << mesh.cells_to_vertices[3 * c + 1] << ' '
       << mesh.cells_to_vertices[3 * c + 2] << '\n';
  os << "CELL_TYPES " << mesh.num_cells << '\n';
  for (std::size_t c = 0; c < mesh.num_cells; ++c) os << "5\n";
  os << "CELL_DATA " << mesh.num_cells << '\n';
  os << "SCALARS tile_id int 1\nLOOKUP_TABLE default\n";
  for (int v : tiling.tile_id) os << v << '\n';
  os << "SCALARS color int 1\nLOOKUP_TABLE default\n";
  for (int v : tiling.color) os << v << '\n';
  return os.str();
}

void write_vtk(const std::string& path, const Mesh& mesh, const CellTiling& tiling) {
  const std::string text = vtk_text(mesh, tiling);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  if (!out.flush()) throw IoError("failed writing '" + path + "'");
}

} // namespace sparsetile
