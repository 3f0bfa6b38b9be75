#include "rts/pipeline.hpp"

#include <algorithm>

namespace rts {
namespace {

// Top-level stream labels shared by every method so that, for one seed, all
// methods start from the same initial and path noise.
constexpr std::uint64_t kPathNoise = 1;
constexpr std::uint64_t kInitialNoise = 2;
constexpr std::uint64_t kInitialSearch = 3;
constexpr std::uint64_t kIntermediate = 4;
constexpr std::uint64_t kBonCandidates = 5;
constexpr std::uint64_t kZoMoves = 6;
constexpr std::uint64_t kSolverDraws = 7;

std::uint64_t init_eval_cost(const SolverSpec& spec, const RtsConfig& cfg) {
  const int steps = cfg.eval_steps_init.value_or(spec.steps);
  return steps == spec.steps ? denoise_cost(spec) : static_cast<std::uint64_t>(steps);
}

void append_history(std::vector<double>& out, const std::vector<RoundSummary>& rounds) {
  for (const auto& r : rounds) {
    if (r.best_reward) out.push_back(r.best_reward->value());
  }
}

std::uint64_t remaining(std::optional<std::uint64_t> budget, std::uint64_t used, std::uint64_t reserve) {
  if (!budget) return std::numeric_limits<std::uint64_t>::max();
  return *budget >= used + reserve ? *budget - used - reserve : 0;
}

}  // namespace

std::string to_string(Method m) {
  switch (m) {
    case Method::kRts: return "rts";
    case Method::kBon: return "bon";
    case Method::kZo: return "zo";
    case Method::kFree: return "free";
  }
  return "unknown";
}

Method method_from_string(const std::string& name) {
  if (name == "rts") return Method::kRts;
  if (name == "bon") return Method::kBon;
  if (name == "zo") return Method::kZo;
  if (name == "free") return Method::kFree;
  throw ConfigError("unknown method '" + name + "' (expected rts, bon, zo or free)");
}

void RtsConfig::validate(const SolverSpec& spec) const {
  spec.validate();
  if (search_init.rounds != 0) search_init.validate();
  if (search_inter.rounds != 0) search_inter.validate();
  if (search_init.rounds < 0 || search_inter.rounds < 0) throw PreconditionError("rts: rounds must be >= 0");
  if (k_keysteps < 0) throw PreconditionError("rts: k_keysteps must be >= 0");
  if (eval_steps_init && *eval_steps_init < 1) throw PreconditionError("rts: eval_steps_init must be >= 1");
  if (eval_steps_inter < 1) throw PreconditionError("rts: eval_steps_inter must be >= 1");
  if (intermediate_phase_active(spec, *this)) {
    if (k_keysteps > spec.steps - 1) throw PreconditionError("rts: k_keysteps exceeds the interior step count");
    if (spec.steps + 1 < 4) throw PreconditionError("rts: key-step selection needs at least 3 solver steps");
  }
}

bool intermediate_phase_active(const SolverSpec& spec, const RtsConfig& cfg) {
  return spec.mode == SolverMode::kSde && cfg.k_keysteps > 0 && cfg.search_inter.rounds > 0;
}

std::uint64_t denoise_cost(const SolverSpec& spec) { return 2ull * static_cast<std::uint64_t>(spec.steps); }

NfeLedger planned_nfe(const SolverSpec& spec, const RtsConfig& cfg, const std::optional<KeyStepSet>& key_steps) {
  NfeLedger ledger;
  if (cfg.search_init.rounds > 0) ledger.initial = search_evaluation_count(cfg.search_init) * init_eval_cost(spec, cfg);
  if (intermediate_phase_active(spec, cfg)) {
    if (!key_steps || key_steps->indices.empty()) {
      throw PreconditionError("planned_nfe: key steps are required when the intermediate phase runs");
    }
    const auto [lo, hi] = std::minmax_element(key_steps->indices.begin(), key_steps->indices.end());
    ledger.record = denoise_cost(spec);
    ledger.replay = 2ull * static_cast<std::uint64_t>(*hi - *lo + 1);
    ledger.intermediate = static_cast<std::uint64_t>(cfg.k_keysteps) * search_evaluation_count(cfg.search_inter) *
                          static_cast<std::uint64_t>(cfg.eval_steps_inter);
  }
  ledger.final = denoise_cost(spec);
  return ledger;
}

std::uint64_t max_planned_nfe(const SolverSpec& spec, const RtsConfig& cfg) {
  std::optional<KeyStepSet> widest;
  if (intermediate_phase_active(spec, cfg)) widest = KeyStepSet{{1, spec.steps - 1}, {0.0, 0.0}};
  return planned_nfe(spec, cfg, widest).total();
}

RunResult run_rts(const MixtureModel& model, const SolverSpec& spec, const RewardModel& reward, const RtsConfig& cfg,
                  const RngStream& stream) {
  cfg.validate(spec);
  const Eigen::Index d = model.dim();
  const std::uint64_t full = denoise_cost(spec);
  const auto& grid = spec.time_grid;
  NfeCounter nfe;
  bool truncated = false;
  bool inter_active = intermediate_phase_active(spec, cfg);

  if (cfg.budget_nfe && *cfg.budget_nfe < full) throw BudgetError("rts: budget smaller than one full denoise");
  if (cfg.budget_nfe && inter_active && *cfg.budget_nfe < 2 * full) {
    inter_active = false;
    truncated = true;
  }
  const std::uint64_t reserve = full + (inter_active ? full : 0);

  const std::vector<Latent> path = draw_path_noise(spec, d, stream.derive(kPathNoise));
  const RngStream solver_stream = stream.derive(kSolverDraws);
  Latent z_init = sample_gaussian(stream.derive(kInitialNoise), d);
  RoundHistory history;

  // Initial-noise phase: multi-cycle search, scored by a full denoise (or a
  // cheaper lookahead when eval_steps_init is shorter than the solver).
  if (cfg.search_init.rounds > 0) {
    const std::uint64_t cost = init_eval_cost(spec, cfg);
    const bool full_rollout = cost == full;
    const int lookahead = cfg.eval_steps_init.value_or(spec.steps);
    std::optional<std::size_t> max_calls;
    if (cfg.budget_nfe) max_calls = static_cast<std::size_t>(remaining(cfg.budget_nfe, nfe.count(), reserve) / cost);
    Evaluator eval(
        [&](const Latent& z, const RngStream&) {
          const Latent x0 = full_rollout ? denoise(model, spec, z, std::span<const Latent>(path), solver_stream, nfe)
                                               .final_sample()
                                         : lookahead_clean(model, z, 1.0, lookahead, nfe);
          return evaluate_reward(reward, x0);
        },
        max_calls, cfg.workers);
    const SearchResult found = run_search(z_init, cfg.search_init, eval, stream.derive(kInitialSearch));
    append_history(history.initial, found.history);
    truncated = truncated || found.truncated;
    if (found.reward) z_init = found.best;
  }

  std::vector<Latent> injected = path;
  std::optional<KeyStepSet> key_steps;
  if (inter_active) {
    const NoiseTrajectory recorded = denoise(model, spec, z_init, std::span<const Latent>(path), solver_stream, nfe);
    key_steps = select_key_steps(project_trajectory(recorded), cfg.k_keysteps, cfg.curvature);

    // Visit key steps from high noise to low noise; each search sees the
    // trajectory as already modified by the earlier choices.
    std::vector<int> order = key_steps->indices;
    std::sort(order.begin(), order.end());
    int cursor_idx = order.front() - 1;
    Latent cursor = recorded.latents[cursor_idx];
    const RngStream inter_stream = stream.derive(kIntermediate);

    for (int l : order) {
      const std::uint64_t replay_cost = 2ull * static_cast<std::uint64_t>(l - cursor_idx);
      if (remaining(cfg.budget_nfe, nfe.count(), full) < replay_cost) {
        truncated = true;
        break;
      }
      while (cursor_idx < l - 1) {
        cursor = heun_step(model, cursor, grid[cursor_idx], grid[cursor_idx + 1], nfe);
        cursor = Latent(cursor.values() + spec.noise_scale(cursor_idx) * injected[cursor_idx].values());
        ++cursor_idx;
      }
      const Latent drift = heun_step(model, cursor, grid[l - 1], grid[l], nfe);
      const double scale = spec.noise_scale(l - 1);
      const double t_l = grid[l];

      std::optional<std::size_t> max_calls;
      if (cfg.budget_nfe) {
        max_calls = static_cast<std::size_t>(remaining(cfg.budget_nfe, nfe.count(), full) /
                                             static_cast<std::uint64_t>(cfg.eval_steps_inter));
      }
      Evaluator eval(
          [&](const Latent& noise, const RngStream&) {
            const Latent x(drift.values() + scale * noise.values());
            return evaluate_reward(reward, lookahead_clean(model, x, t_l, cfg.eval_steps_inter, nfe));
          },
          max_calls, cfg.workers);
      const SearchResult found = run_search(injected[l - 1], cfg.search_inter, eval, inter_stream.derive(l));
      append_history(history.intermediate, found.history);
      if (found.reward) injected[l - 1] = found.best;

      cursor = Latent(drift.values() + scale * injected[l - 1].values());
      cursor_idx = l;
      if (found.truncated) {
        truncated = true;
        break;
      }
    }
  }

  const NoiseTrajectory final_traj = denoise(model, spec, z_init, std::span<const Latent>(injected), solver_stream, nfe);
  const Latent& sample = final_traj.final_sample();
  return RunResult{Method::kRts,
                   sample,
                   evaluate_reward(reward, sample),
                   nfe.count(),
                   std::move(key_steps),
                   std::move(history),
                   stream.root_seed(),
                   truncated,
                   z_init,
                   std::move(injected)};
}

RunResult run_bon(const MixtureModel& model, const SolverSpec& spec, const RewardModel& reward,
                  std::uint64_t budget_nfe, const RngStream& stream, unsigned workers) {
  spec.validate();
  const std::uint64_t full = denoise_cost(spec);
  if (budget_nfe < full) throw BudgetError("bon: budget smaller than one full denoise");
  const auto n = static_cast<std::size_t>(budget_nfe / full);
  const Eigen::Index d = model.dim();
  NfeCounter nfe;

  struct Candidate {
    Latent init;
    std::vector<Latent> path;
    Latent sample;
    RewardScore reward;
  };
  std::vector<std::optional<Candidate>> candidates(n);
  const RngStream pool = stream.derive(kBonCandidates);
  parallel_for(n, workers, [&](std::size_t i) {
    // Candidate 0 reuses the shared starting noise, so BoN with one
    // candidate is exactly the FREE sample.
    const RngStream cs = pool.derive(i);
    Latent init = sample_gaussian(i == 0 ? stream.derive(kInitialNoise) : cs.derive(0), d);
    std::vector<Latent> path = draw_path_noise(spec, d, i == 0 ? stream.derive(kPathNoise) : cs.derive(1));
    NoiseTrajectory traj = denoise(model, spec, init, std::span<const Latent>(path), cs, nfe);
    RewardScore r = evaluate_reward(reward, traj.final_sample());
    candidates[i] = Candidate{std::move(init), std::move(path), traj.final_sample(), r};
  });

  RoundHistory history;
  std::size_t best = 0;
  for (std::size_t i = 0; i < n; ++i) {
    history.initial.push_back(candidates[i]->reward.value());
    if (candidates[i]->reward > candidates[best]->reward) best = i;
  }
  auto& win = *candidates[best];
  return RunResult{Method::kBon, win.sample, win.reward,          nfe.count(), std::nullopt, std::move(history),
                   stream.root_seed(), false, win.init, std::move(win.path)};
}

RunResult run_zo(const MixtureModel& model, const SolverSpec& spec, const RewardModel& reward,
                 std::uint64_t budget_nfe, double step_tau, const RngStream& stream) {
  spec.validate();
  const std::uint64_t full = denoise_cost(spec);
  if (budget_nfe < 2 * full) throw BudgetError("zo: budget smaller than two full denoises");
  if (!(step_tau >= 0.0 && step_tau <= 1.0)) throw PreconditionError("zo: step_tau must lie in [0, 1]");
  const auto n = static_cast<std::size_t>(budget_nfe / full);
  const Eigen::Index d = model.dim();
  NfeCounter nfe;

  // The path noise stays fixed so the objective is a function of z_L alone.
  const std::vector<Latent> path = draw_path_noise(spec, d, stream.derive(kPathNoise));
  const RngStream solver_stream = stream.derive(kSolverDraws);
  auto rollout = [&](const Latent& z) {
    return denoise(model, spec, z, std::span<const Latent>(path), solver_stream, nfe).final_sample();
  };

  Latent base = sample_gaussian(stream.derive(kInitialNoise), d);
  Latent sample = rollout(base);
  RewardScore best = evaluate_reward(reward, sample);
  RoundHistory history;
  history.initial.push_back(best.value());

  const RngStream moves = stream.derive(kZoMoves);
  for (std::size_t i = 1; i < n; ++i) {
    const NeighborSet step = random_spherical_sample(base, 1, step_tau, moves.derive(i));
    const Latent candidate_sample = rollout(step.candidates.front());
    const RewardScore r = evaluate_reward(reward, candidate_sample);
    if (r > best) {
      base = step.candidates.front();
      sample = candidate_sample;
      best = r;
    }
    history.initial.push_back(best.value());
  }
  return RunResult{Method::kZo, sample, best, nfe.count(), std::nullopt, std::move(history),
                   stream.root_seed(), false, base, path};
}

RunResult run_free(const MixtureModel& model, const SolverSpec& spec, const RewardModel& reward,
                   const RngStream& stream) {
  spec.validate();
  const Eigen::Index d = model.dim();
  NfeCounter nfe;
  const Latent init = sample_gaussian(stream.derive(kInitialNoise), d);
  std::vector<Latent> path = draw_path_noise(spec, d, stream.derive(kPathNoise));
  const NoiseTrajectory traj = denoise(model, spec, init, std::span<const Latent>(path), stream.derive(kSolverDraws), nfe);
  const RewardScore r = evaluate_reward(reward, traj.final_sample());
  return RunResult{Method::kFree, traj.final_sample(), r, nfe.count(), std::nullopt, RoundHistory{{r.value()}, {}},
                   stream.root_seed(), false, init, std::move(path)};
}

}  // namespace rts
