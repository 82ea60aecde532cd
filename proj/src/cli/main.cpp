#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "sparsetile/cli.hpp"
#include "sparsetile/errors.hpp"
#include "sparsetile/verify.hpp"
#include "sparsetile/vtk.hpp"

namespace sparsetile {

namespace {

struct Overrides {
  std::string config_path;
  std::size_t ts = 0;
  std::string mode;
  int ranks = 0;
  std::size_t depth = 0;
  bool local_maps = false;
  std::string scheme;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("config", o.config_path, "run configuration (YAML)")->required();
  cmd->add_option("--ts", o.ts, "seed tile size for every fused group");
  cmd->add_option("--mode", o.mode, "sequential | shared | distributed");
  cmd->add_option("--ranks", o.ranks, "virtual ranks (distributed mode)");
  cmd->add_option("--depth", o.depth, "halo depth");
  cmd->add_flag("--local-maps", o.local_maps, "execute through local maps");
  cmd->add_option("--scheme", o.scheme, "named fusion scheme from the config");
}

void override_ts(FusionScheme& scheme, std::size_t ts) {
  for (auto& g : scheme) g.ts = ts;
}

RunConfig configure(const Overrides& o) {
  RunConfig c = load_config(o.config_path);
  if (!o.mode.empty()) {
    try {
      c.mode = parse_inspection_mode(o.mode);
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    }
  }
  if (o.ranks > 0) c.ranks = o.ranks;
  if (o.depth > 0) c.depth = o.depth;
  if (o.local_maps) c.local_maps = true;
  if (!o.scheme.empty()) {
    auto it = c.schemes.find(o.scheme);
    if (it == c.schemes.end()) throw ConfigError("unknown fusion scheme '" + o.scheme + "'");
    c.fusion = it->second;
  }
  if (o.ts > 0) {
    c.tile_size = o.ts;
    override_ts(c.fusion, o.ts);
  }
  if (c.ranks > 1 && c.mode != InspectionMode::distributed) throw ConfigError("ranks > 1 requires distributed mode");
  return c;
}

void write_file(const std::string& path, const std::string& text) {
  if (path.empty()) return;
  std::ofstream f(path, std::ios::binary);
  if (!f || !(f << text).flush()) throw IoError("cannot write '" + path + "'");
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

/// Verification of one runner: returns the mismatch report, empty on success.
std::string verify_run(Runner& runner, const FusionScheme& scheme, bool corrupt) {
  const Datasets expected = runner.reference();
  const RunOutcome got = runner.run(scheme, corrupt);
  std::size_t total = 0;
  auto diffs = compare_datasets(expected, got.data, {}, {}, &total);
  return total ? format_mismatches(diffs, total) : std::string{};
}

bool export_tiling(const Runner& runner, const std::string& path, std::ostream& out);

int cmd_run(const Overrides& o, std::size_t repeat, std::ostream& out) {
  Runner runner(configure(o));
  RunOutcome last;
  for (std::size_t k = 0; k < std::max<std::size_t>(repeat, 1); ++k) last = runner.run();
  std::string summaries, report;
  for (const auto& s : last.summaries) summaries += s;
  for (std::size_t g = 0; g < last.reports.size(); ++g) report += last.reports[g].to_key_values("group" + std::to_string(g) + ".");
  std::ostringstream kv;
  kv << report << "inspect_seconds=" << last.inspect_seconds << "\nexecute_seconds=" << last.execute_seconds
     << "\ncache_hits=" << runner.cache_hits() << "\ncache_misses=" << runner.cache_misses() << '\n';
  for (const auto& r : last.reports) out << r.to_text();
  out << "inspections: " << runner.cache_misses() << " performed, " << runner.cache_hits() << " served from cache\n";
  const auto& c = runner.config();
  write_file(c.report_path, kv.str());
  write_file(c.summary_path, summaries);
  write_file(c.data_path, dump_datasets(last.data));
  if (!c.vtk_path.empty() && c.mode != InspectionMode::distributed) export_tiling(runner, c.vtk_path, out);
  return kExitOk;
}

int cmd_verify(const Overrides& o, bool corrupt, std::ostream& out, std::ostream& err) {
  Runner runner(configure(o));
  const std::string diff = verify_run(runner, {}, corrupt);
  if (!diff.empty()) {
    err << "verify: FAIL\n" << diff;
    return kExitVerify;
  }
  out << "verify: PASS (" << to_string(runner.config().mode) << ")\n";
  return kExitOk;
}

int cmd_inspect(const Overrides& o, std::ostream& out) {
  Runner runner(configure(o));
  for (const auto& s : runner.inspect_only()) out << s;
  return kExitOk;
}

/// Writes the tiling of the first tiled group with a cells loop; false when none has one.
bool export_tiling(const Runner& runner, const std::string& path, std::ostream& out) {
  const RunConfig& c = runner.config();
  for (const auto& g : resolve_fusion(c, c.fusion)) {
    if (g.ts == 0) continue;
    const LoopChain chain = build_spec_chain(c.chain, mesh_topology(runner.mesh()), c.depth, false, g.first, g.count);
    bool has_cells = false;
    for (const auto& l : chain.loops()) has_cells |= chain.space_of(l).name == space_name(MeshSpace::cells);
    if (!has_cells) continue;
    const Schedule s = inspect(chain, g.ts, c.mode, {c.local_maps, 0});
    write_vtk(path, runner.mesh(), cell_tiling(s, chain));
    out << "wrote " << path << " (" << s.tiles.size() << " tiles, " << s.color_order.size() << " colors)\n";
    return true;
  }
  return false;
}

int cmd_export(const Overrides& o, const std::string& path_override, std::ostream& out) {
  Runner runner(configure(o));
  const RunConfig& c = runner.config();
  const std::string path = path_override.empty() ? c.vtk_path : path_override;
  if (path.empty()) throw ConfigError("export-vtk needs an output path (-o or output.vtk)");
  if (c.mode == InspectionMode::distributed) throw ConfigError("export-vtk needs sequential or shared mode");
  if (!export_tiling(runner, path, out)) throw ConfigError("no fused group contains a loop over cells");
  return kExitOk;
}

int cmd_sweep(const Overrides& o, const std::string& ts_list, const std::string& mode_list,
              const std::string& scheme_list, std::ostream& out) {
  const RunConfig base = configure(o);
  std::vector<std::size_t> sizes;
  for (const auto& t : split_list(ts_list)) {
    try {
      sizes.push_back(std::stoul(t));
    } catch (const std::exception&) {
      throw ConfigError("bad tile size '" + t + "' in --ts-list");
    }
    if (sizes.back() == 0) throw ConfigError("tile sizes must be >= 1");
  }
  if (sizes.empty()) sizes.push_back(base.tile_size);
  std::vector<std::string> modes = split_list(mode_list);
  if (modes.empty()) modes.push_back(std::string(to_string(base.mode)));
  std::vector<std::pair<std::string, FusionScheme>> schemes;
  if (scheme_list.empty()) {
    schemes.emplace_back("config", base.fusion);
    for (const auto& [name, s] : base.schemes) schemes.emplace_back(name, s);
  } else {
    for (const auto& name : split_list(scheme_list)) {
      auto it = base.schemes.find(name);
      if (it == base.schemes.end()) throw ConfigError("unknown fusion scheme '" + name + "'");
      schemes.emplace_back(name, it->second);
    }
  }

  out << std::left << std::setw(12) << "scheme" << std::setw(13) << "mode" << std::setw(6) << "ts" << std::setw(14)
      << "inspect_s" << std::setw(14) << "execute_s" << "verify\n";
  bool all_ok = true;
  for (const auto& m : modes) {
    RunConfig c = base;
    try {
      c.mode = parse_inspection_mode(m);
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    }
    if (c.mode != InspectionMode::distributed) c.ranks = 1;
    Runner runner(c);
    const Datasets expected = runner.reference();
    for (const auto& [name, scheme] : schemes)
      for (std::size_t ts : sizes) {
        FusionScheme s = scheme;
        override_ts(s, ts);
        if (s.empty()) s.push_back({0, c.chain.loops.size(), ts});
        const RunOutcome got = runner.run(s);
        std::size_t total = 0;
        compare_datasets(expected, got.data, {}, {}, &total);
        all_ok &= total == 0;
        out << std::left << std::setw(12) << name << std::setw(13) << to_string(c.mode) << std::setw(6) << ts
            << std::setw(14) << std::scientific << std::setprecision(3) << got.inspect_seconds << std::setw(14)
            << got.execute_seconds << (total == 0 ? "ok" : "FAIL") << '\n';
        out.unsetf(std::ios::scientific);
      }
  }
  return all_ok ? kExitOk : kExitVerify;
}

} // namespace

int cli_main(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"sparse tiling inspector/executor for loop chains over unstructured meshes"};
  app.name("sparsetile");
  app.require_subcommand(1);
  Overrides o;
  std::size_t repeat = 1;
  bool corrupt = false;
  std::string vtk_out, ts_list, mode_list, scheme_list;

  auto* run = app.add_subcommand("run", "inspect and execute the configured fusion scheme");
  add_common(run, o);
  run->add_option("--repeat", repeat, "execute the chain this many times (later runs hit the schedule cache)");
  auto* verify = app.add_subcommand("verify", "compare the tiled run against the untiled reference");
  add_common(verify, o);
  verify->add_flag("--corrupt-schedule", corrupt, "test hook: break legality of every tiled schedule");
  auto* inspect_cmd = app.add_subcommand("inspect-only", "inspect and print inspection summaries");
  add_common(inspect_cmd, o);
  auto* vtk = app.add_subcommand("export-vtk", "write the tiling of the first fused cells loop as VTK");
  add_common(vtk, o);
  vtk->add_option("-o,--output", vtk_out, "output file");
  auto* sweep = app.add_subcommand("sweep", "time and verify every tile size x scheme x mode");
  add_common(sweep, o);
  sweep->add_option("--ts-list", ts_list, "comma-separated tile sizes");
  sweep->add_option("--modes", mode_list, "comma-separated modes");
  sweep->add_option("--schemes", scheme_list, "comma-separated scheme names (default: all)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return kExitOk;
    }
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    if (*run) return cmd_run(o, repeat, out);
    if (*verify) return cmd_verify(o, corrupt, out, err);
    if (*inspect_cmd) return cmd_inspect(o, out);
    if (*vtk) return cmd_export(o, vtk_out, out);
    if (*sweep) return cmd_sweep(o, ts_list, mode_list, scheme_list, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DepthExceeded& e) {
    err << "depth exceeded: " << e.what() << '\n';
    return kExitDepth;
  } catch (const VerificationFailure& e) {
    err << "verification failed: " << e.what() << '\n';
    return kExitVerify;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}

} // namespace sparsetile
