#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "chainheat/errors.hpp"
#include "chainheat/harness.hpp"

namespace chainheat {

namespace {

int line_of(const YAML::Node& node) { return node.Mark().line + 1; }

template <class T>
T as(const YAML::Node& node, const std::string& key) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError("type mismatch for '" + key + "'", line_of(node));
  }
}

void check_keys(const YAML::Node& map, const std::set<std::string>& allowed, const std::string& where) {
  if (!map.IsMap()) throw ConfigError("'" + where + "' must be a mapping", line_of(map));
  for (const auto& kv : map) {
    auto key = kv.first.as<std::string>();
    if (!allowed.count(key))
      throw ConfigError("unknown key '" + key + "' in " + where, line_of(kv.first));
  }
}

void require(bool ok, const std::string& msg, const YAML::Node& node) {
  if (!ok) throw ConfigError(msg, line_of(node));
}

void parse_force(const YAML::Node& node, ChainParams& p) {
  require(node.IsMap(), "'force' must map mode numbers to [re, im]", node);
  for (const auto& kv : node) {
    int l = as<int>(kv.first, "force mode");
    cplx v;
    if (kv.second.IsSequence()) {
      require(kv.second.size() == 2, "force coefficient must be [re, im]", kv.second);
      v = {as<double>(kv.second[0], "force"), as<double>(kv.second[1], "force")};
    } else {
      v = as<double>(kv.second, "force");
    }
    try {
      set_force_coefficient(p.force, l, v);
    } catch (const DomainError& e) {
      throw ConfigError(e.what(), line_of(kv.first));
    }
  }
}

void parse_initial(const YAML::Node& node, InitialData& init) {
  check_keys(node, {"kind", "profile", "left", "right", "at", "delta", "site"}, "initial");
  if (node["kind"]) {
    auto k = as<std::string>(node["kind"], "kind");
    if (k == "gibbs_constant") init.kind = InitialKind::GibbsConstant;
    else if (k == "local_gibbs_profile") init.kind = InitialKind::LocalGibbsProfile;
    else if (k == "mean_kick") init.kind = InitialKind::MeanKick;
    else throw ConfigError("unknown initial kind '" + k + "'", line_of(node["kind"]));
  }
  if (node["profile"]) {
    init.profile = as<std::string>(node["profile"], "profile");
    require(init.profile == "step" || init.profile == "linear" || init.profile == "constant",
            "profile must be step, linear or constant", node["profile"]);
  }
  if (node["left"]) init.left = as<double>(node["left"], "left");
  if (node["right"]) init.right = as<double>(node["right"], "right");
  if (node["at"]) init.at = as<double>(node["at"], "at");
  if (node["delta"]) init.delta = as<double>(node["delta"], "delta");
  if (node["site"]) init.site = as<int>(node["site"], "site");
  require(init.left > 0 && init.right > 0, "initial temperatures must be positive", node);
  require(init.at > 0 && init.at < 1, "step position must lie in (0, 1)", node);
  require(init.delta >= 0 && init.delta < 2, "kick exponent must lie in [0, 2)", node);
}

}  // namespace

double InitialData::temperature(double u) const {
  if (kind == InitialKind::GibbsConstant || profile == "constant") return left;
  if (profile == "linear") return left + (right - left) * u;
  return u < at ? left : right;
}

const char* to_string(Scenario s) {
  switch (s) {
    case Scenario::Spectral: return "spectral";
    case Scenario::WorkConvergence: return "work_convergence";
    case Scenario::SteadyState: return "steady_state";
    case Scenario::DiffusiveEvolution: return "diffusive_evolution";
    case Scenario::McCrosscheck: return "mc_crosscheck";
    case Scenario::PdeCompare: return "pde_compare";
    case Scenario::VerifyAll: return "verify_all";
  }
  return "unknown";
}

Scenario scenario_from_string(const std::string& name) {
  for (auto s : {Scenario::Spectral, Scenario::WorkConvergence, Scenario::SteadyState,
                 Scenario::DiffusiveEvolution, Scenario::McCrosscheck, Scenario::PdeCompare,
                 Scenario::VerifyAll})
    if (name == to_string(s)) return s;
  throw ConfigError("unknown scenario '" + name + "'", 0);
}

ExperimentConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(e.msg, e.mark.line + 1);
  }
  if (root.IsNull()) throw ConfigError("empty configuration", 0);
  check_keys(root,
             {"scenario", "n", "omega0", "gamma", "t_minus", "theta", "a", "b", "force", "n_values",
              "t_grid", "initial", "tolerances", "output_dir", "seed", "threads", "integrator_tol",
              "mc", "pde"},
             "configuration");
  ExperimentConfig c;
  c.source = text;
  ChainParams& p = c.params;
  if (root["scenario"]) {
    try {
      c.scenario = scenario_from_string(as<std::string>(root["scenario"], "scenario"));
    } catch (const ConfigError& e) {
      throw ConfigError(e.what(), line_of(root["scenario"]));
    }
  }
  if (root["n"]) p.n = as<int>(root["n"], "n");
  if (root["omega0"]) p.omega0 = as<double>(root["omega0"], "omega0");
  if (root["gamma"]) p.gamma = as<double>(root["gamma"], "gamma");
  if (root["t_minus"]) p.t_minus = as<double>(root["t_minus"], "t_minus");
  if (root["theta"]) p.theta = as<double>(root["theta"], "theta");
  if (root["a"]) p.a = as<double>(root["a"], "a");
  if (root["b"]) p.b = as<double>(root["b"], "b");
  if (root["force"]) parse_force(root["force"], p);
  auto key_node = [&](const char* k) { return root[k] ? root[k] : root; };
  require(p.n >= 1, "n must be >= 1", key_node("n"));
  require(p.omega0 > 0, "omega0 must be positive", key_node("omega0"));
  require(p.gamma > 0, "gamma must be positive", key_node("gamma"));
  require(p.t_minus > 0, "t_minus must be positive", key_node("t_minus"));
  require(p.theta > 0, "theta must be positive", key_node("theta"));
  try {
    p.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what(), line_of(key_node("a")));
  }

  if (root["n_values"]) {
    c.n_values = as<std::vector<int>>(root["n_values"], "n_values");
    require(!c.n_values.empty(), "n_values must not be empty", root["n_values"]);
    require(std::is_sorted(c.n_values.begin(), c.n_values.end()) &&
                std::adjacent_find(c.n_values.begin(), c.n_values.end()) == c.n_values.end(),
            "n_values must be strictly ascending", root["n_values"]);
    require(c.n_values.front() >= 2, "n_values entries must be >= 2", root["n_values"]);
  } else {
    c.n_values = {p.n};
  }
  if (root["t_grid"]) {
    c.t_grid = as<std::vector<double>>(root["t_grid"], "t_grid");
    for (double t : c.t_grid) require(t >= 0, "t_grid entries must be non-negative", root["t_grid"]);
  }
  if (root["initial"]) parse_initial(root["initial"], c.initial);
  if (root["tolerances"]) {
    require(root["tolerances"].IsMap(), "'tolerances' must be a mapping", root["tolerances"]);
    for (const auto& kv : root["tolerances"])
      c.tolerances[kv.first.as<std::string>()] = as<double>(kv.second, "tolerance");
  }
  if (root["output_dir"]) c.output_dir = as<std::string>(root["output_dir"], "output_dir");
  if (root["seed"]) c.seed = as<std::uint64_t>(root["seed"], "seed");
  if (root["threads"]) {
    c.threads = as<int>(root["threads"], "threads");
    require(c.threads >= 1, "threads must be >= 1", root["threads"]);
  }
  if (root["integrator_tol"]) {
    c.integrator_tol = as<double>(root["integrator_tol"], "integrator_tol");
    require(c.integrator_tol > 0 && c.integrator_tol < 1e-2, "integrator_tol must lie in (0, 1e-2)",
            root["integrator_tol"]);
  }
  if (const auto mc = root["mc"]) {
    check_keys(mc, {"paths", "dt", "blocks", "splitting"}, "mc");
    if (mc["paths"]) c.mc_paths = as<long>(mc["paths"], "paths");
    if (mc["dt"]) c.mc_dt = as<double>(mc["dt"], "dt");
    if (mc["blocks"]) c.mc_blocks = as<int>(mc["blocks"], "blocks");
    if (mc["splitting"]) {
      auto s = as<std::string>(mc["splitting"], "splitting");
      require(s == "strang" || s == "lie", "splitting must be strang or lie", mc["splitting"]);
      c.mc_strang = s == "strang";
    }
    require(c.mc_blocks >= 2 && c.mc_paths >= c.mc_blocks, "mc needs blocks >= 2 and paths >= blocks", mc);
    require(c.mc_dt >= 0, "mc dt must be non-negative", mc);
  }
  if (const auto pde = root["pde"]) {
    check_keys(pde, {"grid", "dt"}, "pde");
    if (pde["grid"]) c.pde_grid = as<int>(pde["grid"], "grid");
    if (pde["dt"]) c.pde_dt = as<double>(pde["dt"], "dt");
    require(c.pde_grid >= 8, "pde grid must be >= 8", pde);
    require(c.pde_dt >= 0, "pde dt must be non-negative", pde);
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace chainheat
