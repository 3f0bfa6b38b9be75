#include "rts/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace rts {
namespace {

std::string where(const YAML::Node& node) {
  const YAML::Mark mark = node.Mark();
  if (mark.is_null() || mark.line < 0) return "command line";
  return "line " + std::to_string(mark.line + 1);
}

[[noreturn]] void fail(const YAML::Node& node, const std::string& key, const std::string& msg) {
  throw ConfigError(where(node) + ": '" + key + "': " + msg);
}

std::string join(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

void check_keys(const YAML::Node& node, const std::string& path, const std::set<std::string>& allowed) {
  if (!node.IsMap()) fail(node, path.empty() ? "<root>" : path, "expected a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.contains(key)) fail(kv.first, join(path, key), "unknown key");
  }
}

template <typename T>
T read(const YAML::Node& node, const std::string& key, T fallback) {
  if (!node || node.IsNull()) return fallback;
  try {
    return node.as<T>();
  } catch (const YAML::BadConversion&) {
    fail(node, key, "cannot convert '" + YAML::Dump(node) + "'");
  }
}

// Optional fields accept an explicit null to mean "unset".
template <typename T>
std::optional<T> read_optional(const YAML::Node& node, const std::string& key, std::optional<T> fallback) {
  if (!node) return fallback;
  if (node.IsNull()) return std::nullopt;
  return read<T>(node, key, T{});
}

void require(bool ok, const YAML::Node& node, const std::string& key, const std::string& msg) {
  if (!ok) fail(node, key, msg);
}

SearchConfig read_search(const YAML::Node& node, const std::string& path, SearchConfig cfg) {
  if (!node) return cfg;
  check_keys(node, path, {"n_neighbors", "rounds", "tau", "alpha", "track_global_best", "pin_fallback"});
  cfg.n_neighbors = read(node["n_neighbors"], join(path, "n_neighbors"), cfg.n_neighbors);
  cfg.rounds = read(node["rounds"], join(path, "rounds"), cfg.rounds);
  cfg.tau = read(node["tau"], join(path, "tau"), cfg.tau);
  cfg.alpha = read(node["alpha"], join(path, "alpha"), cfg.alpha);
  cfg.track_global_best = read(node["track_global_best"], join(path, "track_global_best"), cfg.track_global_best);
  cfg.pin_fallback = read(node["pin_fallback"], join(path, "pin_fallback"), cfg.pin_fallback);
  require(cfg.n_neighbors >= 1, node["n_neighbors"], join(path, "n_neighbors"), "must be >= 1");
  require(cfg.rounds >= 0, node["rounds"], join(path, "rounds"), "must be >= 0");
  require(cfg.tau >= 0.0 && cfg.tau <= 1.0, node["tau"], join(path, "tau"), "must lie in [0, 1]");
  require(cfg.alpha >= 0.0 && cfg.alpha <= 1.0, node["alpha"], join(path, "alpha"), "must lie in [0, 1]");
  return cfg;
}

void set_path(YAML::Node node, std::span<const std::string> parts, const YAML::Node& value) {
  if (parts.size() == 1) {
    node[parts[0]] = value;
    return;
  }
  if (!node[parts[0]] || !node[parts[0]].IsMap()) node[parts[0]] = YAML::Node(YAML::NodeType::Map);
  set_path(node[parts[0]], parts.subspan(1), value);
}

std::vector<std::string> split_dots(const std::string& key) {
  std::vector<std::string> parts;
  std::stringstream ss(key);
  for (std::string part; std::getline(ss, part, '.');) {
    if (part.empty()) throw ConfigError("command line: '" + key + "': empty key segment");
    parts.push_back(part);
  }
  if (parts.empty()) throw ConfigError("command line: empty override key");
  return parts;
}

RunConfig from_yaml(const YAML::Node& root) {
  RunConfig cfg;
  check_keys(root, "",
             {"dimension", "seed", "replicates", "method", "out", "workers", "solver", "mixture", "reward",
              "search_init", "search_inter", "k_keysteps", "eval_steps_init", "eval_steps_inter", "budget_nfe",
              "curvature", "baseline"});

  cfg.dimension = read(root["dimension"], "dimension", cfg.dimension);
  require(cfg.dimension >= kMinDimension, root["dimension"], "dimension", "must be >= 2");
  cfg.seed = read(root["seed"], "seed", cfg.seed);
  cfg.replicates = read(root["replicates"], "replicates", cfg.replicates);
  require(cfg.replicates >= 1, root["replicates"], "replicates", "must be >= 1");
  if (root["method"]) {
    try {
      cfg.method = method_from_string(read<std::string>(root["method"], "method", ""));
    } catch (const ConfigError& e) {
      fail(root["method"], "method", e.what());
    }
  }
  cfg.out = read(root["out"], "out", cfg.out);
  const int workers = read(root["workers"], "workers", 1);
  require(workers >= 1, root["workers"], "workers", "must be >= 1");
  cfg.workers = static_cast<unsigned>(workers);

  if (const YAML::Node s = root["solver"]) {
    check_keys(s, "solver", {"mode", "steps", "churn"});
    const auto mode = read<std::string>(s["mode"], "solver.mode", "sde");
    const int steps = read(s["steps"], "solver.steps", cfg.solver.steps);
    const double churn = read(s["churn"], "solver.churn", cfg.solver.churn);
    require(steps >= 1, s["steps"], "solver.steps", "must be >= 1");
    require(std::isfinite(churn) && churn >= 0.0, s["churn"], "solver.churn", "must be finite and >= 0");
    if (mode == "ode") {
      cfg.solver = SolverSpec::ode(steps);
    } else if (mode == "sde") {
      require(steps >= 2, s["steps"], "solver.steps", "SDE mode needs at least 2 steps");
      cfg.solver = SolverSpec::sde(steps, churn);
    } else {
      fail(s["mode"], "solver.mode", "expected 'ode' or 'sde'");
    }
  }

  const YAML::Node m = root["mixture"];
  if (!m) fail(root, "mixture", "missing required section");
  check_keys(m, "mixture", {"weights", "means", "stddevs"});
  cfg.mixture.weights = read<std::vector<double>>(m["weights"], "mixture.weights", {});
  cfg.mixture.means = read<std::vector<std::vector<double>>>(m["means"], "mixture.means", {});
  cfg.mixture.stddevs = read<std::vector<double>>(m["stddevs"], "mixture.stddevs", {});
  const std::size_t n = cfg.mixture.weights.size();
  require(n >= 1, m, "mixture.weights", "at least one component required");
  require(cfg.mixture.means.size() == n, m["means"], "mixture.means", "needs one mean per weight");
  require(cfg.mixture.stddevs.size() == n, m["stddevs"], "mixture.stddevs", "needs one stddev per weight");
  for (const auto& mu : cfg.mixture.means) {
    require(mu.size() == static_cast<std::size_t>(cfg.dimension), m["means"], "mixture.means",
            "each mean must have 'dimension' entries");
  }

  if (const YAML::Node r = root["reward"]) {
    check_keys(r, "reward", {"kind", "preferred", "sharpness", "off_weight", "target"});
    const auto kind = read<std::string>(r["kind"], "reward.kind", "mode_preference");
    if (kind == "mode_preference") {
      cfg.reward.kind = RewardKind::kModePreference;
    } else if (kind == "quadratic") {
      cfg.reward.kind = RewardKind::kQuadratic;
    } else {
      fail(r["kind"], "reward.kind", "expected 'mode_preference' or 'quadratic'");
    }
    cfg.reward.preferred = read(r["preferred"], "reward.preferred", cfg.reward.preferred);
    cfg.reward.sharpness = read(r["sharpness"], "reward.sharpness", cfg.reward.sharpness);
    cfg.reward.off_weight = read(r["off_weight"], "reward.off_weight", cfg.reward.off_weight);
    cfg.reward.target = read<std::vector<double>>(r["target"], "reward.target", {});
    if (cfg.reward.kind == RewardKind::kModePreference) {
      require(cfg.reward.preferred >= 0 && static_cast<std::size_t>(cfg.reward.preferred) < n, r["preferred"],
              "reward.preferred", "must index a mixture component");
      require(cfg.reward.sharpness > 0.0, r["sharpness"], "reward.sharpness", "must be > 0");
    } else {
      require(cfg.reward.target.size() == static_cast<std::size_t>(cfg.dimension), r["target"], "reward.target",
              "must have 'dimension' entries");
    }
  }

  cfg.rts.search_init = read_search(root["search_init"], "search_init", cfg.rts.search_init);
  cfg.rts.search_inter = read_search(root["search_inter"], "search_inter", cfg.rts.search_inter);
  cfg.rts.k_keysteps = read(root["k_keysteps"], "k_keysteps", cfg.rts.k_keysteps);
  require(cfg.rts.k_keysteps >= 0, root["k_keysteps"], "k_keysteps", "must be >= 0");
  cfg.rts.eval_steps_init = read_optional<int>(root["eval_steps_init"], "eval_steps_init", cfg.rts.eval_steps_init);
  cfg.rts.eval_steps_inter = read(root["eval_steps_inter"], "eval_steps_inter", cfg.rts.eval_steps_inter);
  cfg.rts.budget_nfe = read_optional<std::uint64_t>(root["budget_nfe"], "budget_nfe", cfg.rts.budget_nfe);
  if (root["curvature"]) {
    const auto kind = read<std::string>(root["curvature"], "curvature", "");
    if (kind == "menger") {
      cfg.rts.curvature = CurvatureKind::kMenger;
    } else if (kind == "turning_angle") {
      cfg.rts.curvature = CurvatureKind::kTurningAngle;
    } else {
      fail(root["curvature"], "curvature", "expected 'menger' or 'turning_angle'");
    }
  }

  if (const YAML::Node b = root["baseline"]) {
    check_keys(b, "baseline", {"budget_nfe", "zo_step_tau"});
    cfg.baseline_budget_nfe = read_optional<std::uint64_t>(b["budget_nfe"], "baseline.budget_nfe", std::nullopt);
    cfg.zo_step_tau = read(b["zo_step_tau"], "baseline.zo_step_tau", cfg.zo_step_tau);
    require(cfg.zo_step_tau >= 0.0 && cfg.zo_step_tau <= 1.0, b["zo_step_tau"], "baseline.zo_step_tau",
            "must lie in [0, 1]");
  }

  // Cross-field checks owned by the library.
  try {
    cfg.solver.validate();
    cfg.rts.validate(cfg.solver);
    const MixtureModel model = cfg.build_model();
    (void)cfg.build_reward(model);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string("invalid configuration: ") + e.what());
  }
  return cfg;
}

}  // namespace

MixtureModel RunConfig::build_model() const {
  std::vector<Latent> means;
  for (const auto& mu : mixture.means) {
    means.emplace_back(Eigen::Map<const Eigen::VectorXd>(mu.data(), static_cast<Eigen::Index>(mu.size())));
  }
  return MixtureModel(mixture.weights, std::move(means), mixture.stddevs);
}

RewardModel RunConfig::build_reward(const MixtureModel& model) const {
  if (reward.kind == RewardKind::kQuadratic) {
    return QuadraticReward{
        Latent(Eigen::Map<const Eigen::VectorXd>(reward.target.data(), static_cast<Eigen::Index>(reward.target.size())))};
  }
  return mode_preference(model, reward.preferred, reward.sharpness, reward.off_weight);
}

std::uint64_t RunConfig::baseline_budget() const {
  return baseline_budget_nfe ? *baseline_budget_nfe : max_planned_nfe(solver, rts);
}

std::pair<std::string, std::string> parse_override(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("command line: '" + text + "': expected key=value");
  }
  return {text.substr(0, eq), text.substr(eq + 1)};
}

RunConfig parse_config(const std::string& yaml_text,
                       const std::vector<std::pair<std::string, std::string>>& overrides) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError("line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  if (!root || root.IsNull()) root = YAML::Node(YAML::NodeType::Map);

  // Later overrides of the same key win; each key is echoed once.
  std::vector<std::pair<std::string, std::string>> echoed;
  for (const auto& [key, value] : overrides) {
    std::erase_if(echoed, [&](const auto& kv) { return kv.first == key; });
    echoed.emplace_back(key, value);
  }
  for (const auto& [key, value] : echoed) {
    const auto parts = split_dots(key);
    YAML::Node parsed;
    try {
      parsed = YAML::Load(value);
    } catch (const YAML::ParserException& e) {
      throw ConfigError("command line: '" + key + "': " + e.msg);
    }
    if (!root.IsMap()) throw ConfigError("line 1: '<root>': expected a mapping");
    set_path(root, parts, parsed);
  }

  RunConfig cfg = from_yaml(root);
  cfg.overrides = std::move(echoed);
  return cfg;
}

RunConfig load_config(const std::string& path, const std::vector<std::pair<std::string, std::string>>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config(buf.str(), overrides);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

unsigned capped_workers(unsigned requested) {
  unsigned workers = std::max(1u, requested);
  if (const char* env = std::getenv("RTS_MAX_WORKERS")) {
    char* end = nullptr;
    const unsigned long cap = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && cap >= 1) workers = std::min<unsigned>(workers, static_cast<unsigned>(cap));
  }
  return workers;
}

}  // namespace rts
