#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "oracle.hpp"
#include "sparsetile/cli.hpp"
#include "sparsetile/errors.hpp"
#include "sparsetile/verify.hpp"
#include "sparsetile/vtk.hpp"

using namespace sparsetile;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("sparsetile_test_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(path / name) << text;
    return (path / name).string();
  }
};

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), "sparsetile");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  return {std::istreambuf_iterator<char>(in), {}};
}

const char* kSmall = R"(mesh:
  nx: 6
  ny: 4
chain: fig2
mode: shared
tile_size: 4
)";

} // namespace

TEST_CASE("config parsing") {
  const auto c = parse_config(R"(mesh: {nx: 5, ny: 3, renumber: true}
chain: synthetic8
mode: sequential
tile_size: 7
local_maps: true
fusion:
  - {loops: [0, 1, 2], ts: 4}
  - {loops: [5, 6], ts: 2}
schemes:
  one:
    - {loops: [0, 1, 2, 3, 4, 5, 6, 7], ts: 8}
)");
  CHECK(c.nx == 5);
  CHECK(c.ny == 3);
  CHECK(c.renumber);
  CHECK(c.chain.loops.size() == 8);
  CHECK(c.mode == InspectionMode::sequential);
  CHECK(c.tile_size == 7);
  CHECK(c.local_maps);
  REQUIRE(c.fusion.size() == 2);
  CHECK(c.fusion[1].first == 5);
  CHECK(c.fusion[1].count == 2);
  CHECK(c.schemes.at("one").front().count == 8);

  const auto custom = parse_config(R"(chain:
  loops:
    - {space: edges, kernel: edge_inc, args: ["direct r edat", "e2v i vdat"]}
  datasets:
    - {name: edat, space: edges, init: ramp}
    - {name: vdat, space: verts}
)");
  REQUIRE(custom.chain.loops.size() == 1);
  CHECK(custom.chain.loops[0].args[1].map == "e2v");
  CHECK(custom.chain.loops[0].args[1].mode == AccessMode::increment);
}

TEST_CASE("config errors carry the line") {
  auto error_of = [](const std::string& text) {
    try {
      parse_config(text, "cfg.yaml");
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(error_of("chain: fig2\nmode: gpu\n").find("cfg.yaml:2") != std::string::npos);
  CHECK(error_of("chain: fig2\ncolour: red\n").find("cfg.yaml:2") != std::string::npos);
  CHECK(error_of("chain: fig2\nranks: 4\n").find("cfg.yaml") != std::string::npos);
  CHECK(error_of("chain: nope\n").find("cfg.yaml:1") != std::string::npos);
  CHECK(error_of("chain: fig2\nfusion:\n  - {loops: [0, 2], ts: 4}\n").find("cfg.yaml:3") != std::string::npos);
  CHECK(error_of("chain: fig2\nmesh: [1, 2\n").find("cfg.yaml") != std::string::npos);
}

TEST_CASE("fusion gaps are filled with untiled loops") {
  auto c = parse_config("chain: synthetic8\n");
  const auto s = resolve_fusion(c, {{2, 3, 5}});
  REQUIRE(s.size() == 6);
  CHECK(s[0].first == 0);
  CHECK(s[0].ts == 0);
  CHECK(s[2].first == 2);
  CHECK(s[2].count == 3);
  CHECK(s[5].first == 7);
  CHECK_THROWS_AS(resolve_fusion(c, {{0, 3, 4}, {2, 2, 4}}), ConfigError);
  CHECK_THROWS_AS(resolve_fusion(c, {{6, 3, 4}}), ConfigError);

  c.mode = InspectionMode::distributed;
  c.ranks = 2;
  CHECK_THROWS_AS(resolve_fusion(c, {{0, 4, 4}}), DepthExceeded);
  CHECK_THROWS_AS(resolve_fusion(c, {}), DepthExceeded);
  CHECK(resolve_fusion(c, {{0, 3, 4}, {3, 3, 4}, {6, 2, 4}}).size() == 3);
}

TEST_CASE("runner verifies, caches and detects corruption") {
  auto c = parse_config(kSmall);
  c.fusion = {{0, 2, 4}};
  Runner runner(c);
  const auto ref = runner.reference();
  const auto a = runner.run();
  CHECK(compare_datasets(ref, a.data).empty());
  CHECK(runner.cache_misses() == 1);
  const auto b = runner.run();
  CHECK(runner.cache_hits() == 1);
  CHECK(compare_datasets(a.data, b.data).empty());

  const auto bad = runner.run({{0, 3, 4}}, true);
  CHECK_FALSE(compare_datasets(ref, bad.data).empty());

  auto d = parse_config(kSmall);
  d.mode = InspectionMode::distributed;
  d.ranks = 2;
  Runner dist(d);
  CHECK(compare_datasets(dist.reference(), dist.run().data, output_datasets(d.chain)).empty());
}

TEST_CASE("exit codes") {
  TempDir dir;
  const auto good = dir.write("good.yaml", kSmall);
  const auto dist = dir.write("dist.yaml", read_file(SPARSETILE_SOURCE_DIR "/configs/distributed.yaml"));

  auto r = cli({"verify", good});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("verify: PASS") != std::string::npos);
  CHECK(cli({"verify", good, "--ts", "1", "--mode", "sequential"}).code == kExitOk);
  CHECK(cli({"verify", dist}).code == kExitOk);
  CHECK(cli({"verify", dist, "--ranks", "2", "--ts", "8"}).code == kExitOk);

  r = cli({"verify", good, "--corrupt-schedule"});
  CHECK(r.code == kExitVerify);
  CHECK(r.err.find("verify: FAIL") != std::string::npos);

  CHECK(cli({"run", dist, "--depth", "2"}).code == kExitDepth);
  CHECK(cli({"run", dir.write("bad.yaml", "chain: fig2\nmode: gpu\n")}).code == kExitConfig);
  CHECK(cli({"run", (dir.path / "missing.yaml").string()}).code != kExitOk);
  CHECK(cli({"frobnicate"}).code != kExitOk);
  r = cli({"verify", "--help"});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("Usage: sparsetile verify") != std::string::npos);

  r = cli({"run", good, "--repeat", "2"});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("1 performed, 1 served from cache") != std::string::npos);

  const auto vtk_path = (dir.path / "run.vtk").string();
  const auto with_vtk = dir.write("vtk.yaml", std::string(kSmall) + "output: {vtk: " + vtk_path + "}\n");
  CHECK(cli({"run", with_vtk}).code == kExitOk);
  CHECK(oracle::parse_vtk(read_file(vtk_path)).cells == 48);
  r = cli({"inspect-only", good});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("projection+tiling") != std::string::npos);
}

TEST_CASE("sweep prints one verified row per combination") {
  TempDir dir;
  const auto cfg = dir.write("s8.yaml", read_file(SPARSETILE_SOURCE_DIR "/configs/synthetic8.yaml"));
  const auto r = cli({"sweep", cfg, "--ts-list", "4,16", "--modes", "sequential,shared", "--schemes", "fs1,fs5"});
  CHECK(r.code == kExitOk);
  std::istringstream in(r.out);
  std::string line;
  std::size_t rows = 0;
  while (std::getline(in, line))
    if (line.find(" ok") != std::string::npos) ++rows;
  CHECK(rows == 8);
}

TEST_CASE("vtk export reparses and matches the schedule") {
  TempDir dir;
  const auto cfg = dir.write("v.yaml", kSmall);
  const auto out = (dir.path / "t.vtk").string();
  REQUIRE(cli({"export-vtk", cfg, "-o", out}).code == kExitOk);
  const auto text = read_file(out);
  const auto vtk = oracle::parse_vtk(text);

  Runner runner(parse_config(kSmall));
  const auto& mesh = runner.mesh();
  CHECK(vtk.points == mesh.num_vertices);
  CHECK(vtk.cells == mesh.num_cells);
  for (std::size_t c = 0; c < mesh.num_cells; ++c) {
    CHECK(vtk.cell_types[c] == 5);
    for (int k = 0; k < 3; ++k) CHECK(vtk.connectivity[c][k] == mesh.cells_to_vertices[3 * c + k]);
  }
  const auto chain = build_spec_chain(runner.config().chain, mesh_topology(mesh), 3);
  const auto s = inspect(chain, 4, InspectionMode::shared);
  const auto tiles = oracle::tile_of(s, chain);
  for (std::size_t c = 0; c < mesh.num_cells; ++c) {
    CHECK(vtk.cell_fields.at("tile_id")[c] == tiles[1][c]);
    CHECK(vtk.cell_fields.at("color")[c] == s.tile(tiles[1][c]).color);
  }

  const auto again = (dir.path / "u.vtk").string();
  REQUIRE(cli({"export-vtk", cfg, "-o", again}).code == kExitOk);
  CHECK(read_file(again) == text);
}

TEST_CASE("vtk of a single tile and of the two-cell example") {
  const auto m = generate_rect_mesh(2, 1);
  const auto chain = build_spec_chain(preset_chain("fig2"), mesh_topology(m), 3);
  auto v = oracle::parse_vtk(vtk_text(m, cell_tiling(inspect(chain, 1000, InspectionMode::shared), chain)));
  CHECK(std::set<long>(v.cell_fields.at("tile_id").begin(), v.cell_fields.at("tile_id").end()) == std::set<long>{0});

  // one cells loop, ts = 1: four tiles, three colors
  ChainSpec cells_only{"cells", {{"cells", "cell_inc", {{"", AccessMode::read, "cdat"}, {"c2v", AccessMode::increment, "vdat"}}}}, {}};
  const auto cc = build_spec_chain(cells_only, mesh_topology(m), 1);
  const auto s = inspect(cc, 1, InspectionMode::shared);
  v = oracle::parse_vtk(vtk_text(m, cell_tiling(s, cc)));
  const auto& ids = v.cell_fields.at("tile_id");
  const auto& colors = v.cell_fields.at("color");
  CHECK(std::set<long>(ids.begin(), ids.end()).size() == 4);
  CHECK(std::set<long>(colors.begin(), colors.end()).size() == 3);

  const auto edges_only = build_spec_chain(preset_chain("fig2"), mesh_topology(m), 3, false, 0, 1);
  CHECK_THROWS_AS(cell_tiling(inspect(edges_only, 2, InspectionMode::shared), edges_only), InvalidArgument);
}

TEST_CASE("dataset dump format") {
  Datasets d;
  d.emplace("a", Dataset{"a", "verts", 1, {1.5, 2}});
  const auto text = dump_datasets(d);
  CHECK(text.rfind("dataset a verts 1 2\n", 0) == 0);
}
