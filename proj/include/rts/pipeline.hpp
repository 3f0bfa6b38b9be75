#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rts/keysteps.hpp"
#include "rts/search.hpp"
#include "rts/sim.hpp"

namespace rts {

enum class Method { kRts, kBon, kZo, kFree };

std::string to_string(Method m);
Method method_from_string(const std::string& name);

struct RtsConfig {
  SearchConfig search_init{3, 4, 0.9, 0.7, true, false};   // rounds = 0 disables the initial phase
  SearchConfig search_inter{3, 2, 0.9, 0.7, true, false};
  int k_keysteps = 6;                                       // 0 disables the intermediate phase
  std::optional<int> eval_steps_init;                       // empty: full solver length
  int eval_steps_inter = 1;
  std::optional<std::uint64_t> budget_nfe;
  CurvatureKind curvature = CurvatureKind::kMenger;
  unsigned workers = 1;                                     // within-round candidate evaluation

  void validate(const SolverSpec& spec) const;
};

struct RoundHistory {
  std::vector<double> initial;
  std::vector<double> intermediate;  // concatenated over key steps, in visiting order

  bool operator==(const RoundHistory&) const = default;
};

struct RunResult {
  Method method = Method::kFree;
  Latent final_sample;
  RewardScore final_reward;
  std::uint64_t nfe_used = 0;
  std::optional<KeyStepSet> key_steps;
  RoundHistory round_history;
  std::uint64_t seed = 0;
  bool truncated = false;
  // The (z_L, z_path) pair that reproduces final_sample when replayed.
  Latent final_init;
  std::vector<Latent> final_injected;
};

// Exact NFE cost of run_rts, broken down by phase. The replay term depends on
// the selected key steps, so it needs them when the intermediate phase runs.
struct NfeLedger {
  std::uint64_t initial = 0;       // search evaluations x cost per evaluation
  std::uint64_t record = 0;        // full denoise of the winning initial noise
  std::uint64_t replay = 0;        // Heun steps re-simulated between key steps
  std::uint64_t intermediate = 0;  // key steps x evaluations x lookahead steps
  std::uint64_t final = 0;         // final full denoise

  std::uint64_t total() const { return initial + record + replay + intermediate + final; }
};

bool intermediate_phase_active(const SolverSpec& spec, const RtsConfig& cfg);
std::uint64_t denoise_cost(const SolverSpec& spec);
NfeLedger planned_nfe(const SolverSpec& spec, const RtsConfig& cfg, const std::optional<KeyStepSet>& key_steps);
// Upper bound over all possible key-step placements.
std::uint64_t max_planned_nfe(const SolverSpec& spec, const RtsConfig& cfg);

RunResult run_rts(const MixtureModel& model, const SolverSpec& spec, const RewardModel& reward, const RtsConfig& cfg,
                  const RngStream& stream);

RunResult run_bon(const MixtureModel& model, const SolverSpec& spec, const RewardModel& reward,
                  std::uint64_t budget_nfe, const RngStream& stream, unsigned workers = 1);

RunResult run_zo(const MixtureModel& model, const SolverSpec& spec, const RewardModel& reward,
                 std::uint64_t budget_nfe, double step_tau, const RngStream& stream);

// One unsearched sample: the same initial and path noise every method starts from.
RunResult run_free(const MixtureModel& model, const SolverSpec& spec, const RewardModel& reward,
                   const RngStream& stream);

}  // namespace rts
