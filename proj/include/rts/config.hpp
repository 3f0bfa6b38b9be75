#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rts/pipeline.hpp"

namespace rts {

struct MixtureSpec {
  std::vector<double> weights;
  std::vector<std::vector<double>> means;
  std::vector<double> stddevs;
};

enum class RewardKind { kModePreference, kQuadratic };

struct RewardSpec {
  RewardKind kind = RewardKind::kModePreference;
  int preferred = 0;
  double sharpness = 0.5;
  double off_weight = 0.5;
  std::vector<double> target;  // quadratic only
};

// Everything a run needs. Loaded from YAML with unknown keys rejected.
struct RunConfig {
  int dimension = 2;
  std::uint64_t seed = 0;
  int replicates = 1;
  Method method = Method::kRts;
  std::string out = "results.jsonl";
  unsigned workers = 1;

  SolverSpec solver = SolverSpec::sde(50, 0.5);
  MixtureSpec mixture;
  RewardSpec reward;
  RtsConfig rts;
  // Budget for BoN and ZO. Empty: matched to the RTS worst-case plan.
  std::optional<std::uint64_t> baseline_budget_nfe;
  double zo_step_tau = 0.0;

  // dotted key -> raw value, in the order given on the command line
  std::vector<std::pair<std::string, std::string>> overrides;

  MixtureModel build_model() const;
  RewardModel build_reward(const MixtureModel& model) const;
  std::uint64_t baseline_budget() const;
};

// Parses `key=value` into a pair. Throws ConfigError on malformed input.
std::pair<std::string, std::string> parse_override(const std::string& text);

// Overrides are applied on top of the document before validation, so they
// take precedence and get the same schema checks.
RunConfig parse_config(const std::string& yaml_text,
                       const std::vector<std::pair<std::string, std::string>>& overrides = {});
RunConfig load_config(const std::string& path,
                      const std::vector<std::pair<std::string, std::string>>& overrides = {});

// Caps a requested worker count by the RTS_MAX_WORKERS environment variable.
unsigned capped_workers(unsigned requested);

}  // namespace rts
