#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "sparsetile/cli.hpp"
#include "sparsetile/errors.hpp"

namespace sparsetile {

namespace {

class ConfigReader {
public:
  explicit ConfigReader(std::string origin) : origin_(std::move(origin)) {}

  [[noreturn]] void fail(const YAML::Node& node, const std::string& msg) const {
    const auto mark = node.Mark();
    if (mark.is_null()) throw ConfigError(origin_ + ": " + msg);
    throw ConfigError(origin_ + ":" + std::to_string(mark.line + 1) + ": " + msg);
  }

  template <class T>
  T get(const YAML::Node& node, const std::string& what) const {
    if (!node.IsScalar()) fail(node, what + " must be a scalar");
    try {
      return node.as<T>();
    } catch (const YAML::Exception&) {
      fail(node, "cannot read " + what + " from '" + node.Scalar() + "'");
    }
  }

  std::size_t count(const YAML::Node& node, const std::string& what, std::size_t min) const {
    const auto text = get<std::string>(node, what);
    if (text.empty() || text.find_first_not_of("0123456789") != std::string::npos)
      fail(node, what + " must be a non-negative integer, got '" + text + "'");
    const auto v = get<std::size_t>(node, what);
    if (v < min) fail(node, what + " must be >= " + std::to_string(min));
    return v;
  }

  void only_keys(const YAML::Node& map, const std::set<std::string>& allowed, const std::string& section) const {
    if (!map.IsMap()) fail(map, section + " must be a mapping");
    for (const auto& kv : map) {
      const auto key = kv.first.as<std::string>();
      if (!allowed.count(key)) fail(kv.first, "unknown key '" + key + "' in " + section);
    }
  }

  ArgDecl arg(const YAML::Node& node) const {
    std::istringstream is(get<std::string>(node, "argument"));
    std::string map, mode, ds, extra;
    if (!(is >> map >> mode >> ds) || (is >> extra))
      fail(node, "argument must read '<map|direct> <r|w|i> <dataset>'");
    ArgDecl a;
    a.map = map == "direct" ? "" : map;
    try {
      a.mode = parse_access_mode(mode);
    } catch (const InvalidArgument& e) {
      fail(node, e.what());
    }
    a.dataset = ds;
    return a;
  }

  ChainSpec chain(const YAML::Node& node) const {
    if (node.IsScalar()) return preset(node);
    only_keys(node, {"preset", "loops", "datasets", "name"}, "chain");
    if (node["preset"]) {
      if (node["loops"] || node["datasets"]) fail(node, "chain takes either a preset or loops and datasets");
      return preset(node["preset"]);
    }
    ChainSpec spec;
    spec.name = node["name"] ? get<std::string>(node["name"], "chain name") : "custom";
    const auto loops = node["loops"];
    if (!loops || !loops.IsSequence() || loops.size() == 0) fail(node, "chain needs a nonempty 'loops' list");
    const KernelRegistry known = builtin_kernels();
    for (const auto& l : loops) {
      only_keys(l, {"space", "kernel", "args"}, "loop");
      if (!l["space"] || !l["kernel"] || !l["args"]) fail(l, "a loop needs space, kernel and args");
      LoopDecl d;
      d.space = get<std::string>(l["space"], "loop space");
      d.kernel = get<std::string>(l["kernel"], "kernel");
      if (!known.contains(d.kernel)) fail(l["kernel"], "unknown kernel '" + d.kernel + "'");
      if (!l["args"].IsSequence()) fail(l["args"], "args must be a list");
      for (const auto& a : l["args"]) d.args.push_back(arg(a));
      spec.loops.push_back(std::move(d));
    }
    const auto datasets = node["datasets"];
    if (!datasets || !datasets.IsSequence()) fail(node, "chain needs a 'datasets' list");
    for (const auto& n : datasets) {
      only_keys(n, {"name", "space", "dim", "init"}, "dataset");
      if (!n["name"] || !n["space"]) fail(n, "a dataset needs name and space");
      DatasetDecl d;
      d.name = get<std::string>(n["name"], "dataset name");
      d.space = get<std::string>(n["space"], "dataset space");
      if (n["dim"]) d.dim = count(n["dim"], "dim", 1);
      if (n["init"]) {
        const auto init = get<std::string>(n["init"], "init");
        if (init == "zero") d.init = DatasetInit::zero;
        else if (init == "ramp") d.init = DatasetInit::ramp;
        else fail(n["init"], "init must be 'zero' or 'ramp'");
      }
      spec.datasets.push_back(std::move(d));
    }
    return spec;
  }

  FusionScheme scheme(const YAML::Node& node, const std::string& what) const {
    if (!node.IsSequence()) fail(node, what + " must be a list of {loops, ts} groups");
    FusionScheme out;
    for (const auto& g : node) {
      only_keys(g, {"loops", "ts"}, what + " group");
      if (!g["loops"] || !g["ts"]) fail(g, "a fusion group needs loops and ts");
      FusionGroup group;
      group.ts = count(g["ts"], "ts", 1);
      const auto loops = g["loops"];
      if (!loops.IsSequence() || loops.size() == 0) fail(loops, "loops must be a nonempty list of loop indices");
      std::vector<std::size_t> idx;
      for (const auto& i : loops) idx.push_back(count(i, "loop index", 0));
      for (std::size_t k = 1; k < idx.size(); ++k)
        if (idx[k] != idx[k - 1] + 1) fail(loops, "fused loops must be contiguous and ascending");
      group.first = idx.front();
      group.count = idx.size();
      out.push_back(group);
    }
    for (std::size_t k = 1; k < out.size(); ++k)
      if (out[k].first < out[k - 1].first + out[k - 1].count)
        fail(node, what + " groups overlap or are out of order");
    return out;
  }

private:
  ChainSpec preset(const YAML::Node& node) const {
    const auto name = get<std::string>(node, "chain preset");
    try {
      return preset_chain(name);
    } catch (const InvalidArgument& e) {
      fail(node, e.what());
    }
  }

  std::string origin_;
};

} // namespace

RunConfig parse_config(const std::string& text, const std::string& origin) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(origin + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  ConfigReader r(origin);
  if (!root.IsMap()) throw ConfigError(origin + ": config must be a mapping of sections");
  r.only_keys(root, {"mesh", "chain", "fusion", "schemes", "mode", "ranks", "depth", "tile_size", "local_maps",
                     "output"},
              "config");

  RunConfig c;
  if (const auto mesh = root["mesh"]) {
    r.only_keys(mesh, {"nx", "ny", "renumber"}, "mesh");
    if (mesh["nx"]) c.nx = r.count(mesh["nx"], "nx", 1);
    if (mesh["ny"]) c.ny = r.count(mesh["ny"], "ny", 1);
    if (mesh["renumber"]) c.renumber = r.get<bool>(mesh["renumber"], "renumber");
  }
  if (!root["chain"]) throw ConfigError(origin + ": missing 'chain' section");
  c.chain = r.chain(root["chain"]);
  if (root["mode"]) {
    try {
      c.mode = parse_inspection_mode(r.get<std::string>(root["mode"], "mode"));
    } catch (const InvalidArgument& e) {
      r.fail(root["mode"], e.what());
    }
  }
  if (root["ranks"]) c.ranks = static_cast<int>(r.count(root["ranks"], "ranks", 1));
  if (root["depth"]) c.depth = r.count(root["depth"], "depth", 1);
  if (root["tile_size"]) c.tile_size = r.count(root["tile_size"], "tile_size", 1);
  if (root["local_maps"]) c.local_maps = r.get<bool>(root["local_maps"], "local_maps");
  if (root["fusion"]) c.fusion = r.scheme(root["fusion"], "fusion");
  if (const auto schemes = root["schemes"]) {
    if (!schemes.IsMap()) r.fail(schemes, "schemes must map names to fusion schemes");
    for (const auto& kv : schemes)
      c.schemes[kv.first.as<std::string>()] = r.scheme(kv.second, "scheme '" + kv.first.as<std::string>() + "'");
  }
  if (const auto out = root["output"]) {
    r.only_keys(out, {"report", "summary", "vtk", "data"}, "output");
    if (out["report"]) c.report_path = r.get<std::string>(out["report"], "report path");
    if (out["summary"]) c.summary_path = r.get<std::string>(out["summary"], "summary path");
    if (out["vtk"]) c.vtk_path = r.get<std::string>(out["vtk"], "vtk path");
    if (out["data"]) c.data_path = r.get<std::string>(out["data"], "data path");
  }
  if (c.ranks > 1 && c.mode != InspectionMode::distributed)
    r.fail(root["ranks"], "ranks > 1 requires mode: distributed");

  const std::size_t n = c.chain.loops.size();
  auto check_range = [&](const FusionScheme& s, const YAML::Node& node) {
    for (const auto& g : s)
      if (g.first + g.count > n) r.fail(node, "fusion group reaches past loop " + std::to_string(n - 1));
  };
  if (root["fusion"]) check_range(c.fusion, root["fusion"]);
  for (const auto& kv : root["schemes"]) check_range(c.schemes[kv.first.as<std::string>()], kv.second);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot read config file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

FusionScheme resolve_fusion(const RunConfig& config, const FusionScheme& scheme) {
  const std::size_t n = config.chain.loops.size();
  FusionScheme groups = scheme;
  if (groups.empty()) groups.push_back({0, n, config.tile_size});
  FusionScheme out;
  std::size_t next = 0;
  for (const auto& g : groups) {
    if (g.count == 0 || g.first < next || g.first + g.count > n)
      throw ConfigError("fusion groups must be nonempty, ordered, disjoint and inside the chain");
    if (g.ts == 0) throw ConfigError("fusion group tile size must be >= 1");
    for (; next < g.first; ++next) out.push_back({next, 1, 0});
    if (config.mode == InspectionMode::distributed && g.count > config.depth)
      throw DepthExceeded("fusion group of " + std::to_string(g.count) + " loops exceeds depth " +
                          std::to_string(config.depth));
    out.push_back(g);
    next = g.first + g.count;
  }
  for (; next < n; ++next) out.push_back({next, 1, 0});
  return out;
}

Mesh build_mesh(const RunConfig& config) {
  Mesh m = generate_rect_mesh(config.nx, config.ny);
  return config.renumber ? rcm_renumber(m) : m;
}

} // namespace sparsetile
