#include "rts/search.hpp"

#include <algorithm>

namespace rts {
namespace {

// Per-round stream labels.
constexpr std::uint64_t kFreshBase = 0;
constexpr std::uint64_t kNeighbors = 1;
constexpr std::uint64_t kBaseEval = 2;
constexpr std::uint64_t kCandidateEval = 3;
constexpr std::uint64_t kFallbackNeighbors = 4;

void offer_global_best(SearchState& state, const Latent& x, RewardScore r) {
  // Ties go to the later point.
  if (!state.global_best || r >= state.global_best->reward) state.global_best = ScoredLatent{x, r};
}

void offer_round_best(RoundSummary& summary, RewardScore r) {
  if (!summary.best_reward || r > *summary.best_reward) summary.best_reward = r;
}

// Records evaluated neighbor candidates (possibly a truncated prefix).
void record_candidates(SearchState& state, RoundSummary& summary, const NeighborSet& set,
                       const std::vector<RewardScore>& rewards) {
  state.last_round.clear();
  state.last_round_best.reset();
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    state.last_round.push_back(ScoredLatent{set.candidates[i], rewards[i]});
    if (!state.last_round_best || rewards[i] > state.last_round_best->reward) {
      state.last_round_best = ScoredLatent{set.candidates[i], rewards[i]};
    }
    offer_global_best(state, set.candidates[i], rewards[i]);
    offer_round_best(summary, rewards[i]);
  }
  summary.evaluations += rewards.size();
}

}  // namespace

void SearchConfig::validate() const {
  if (n_neighbors < 1) throw PreconditionError("search: n_neighbors must be >= 1");
  if (rounds < 1) throw PreconditionError("search: rounds must be >= 1");
  if (!(tau >= 0.0 && tau <= 1.0)) throw PreconditionError("search: tau must lie in [0, 1]");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw PreconditionError("search: alpha must lie in [0, 1]");
}

Evaluator::Evaluator(Fn fn, std::optional<std::size_t> max_calls, unsigned workers)
    : fn_(std::move(fn)), max_calls_(max_calls), workers_(std::max(1u, workers)) {}

std::size_t Evaluator::remaining() const {
  if (!max_calls_) return std::numeric_limits<std::size_t>::max();
  const auto used = calls_.load();
  return used >= *max_calls_ ? 0 : *max_calls_ - used;
}

std::optional<RewardScore> Evaluator::evaluate(const Latent& x, const RngStream& stream) {
  if (exhausted()) return std::nullopt;
  calls_.fetch_add(1);
  return fn_(x, stream);
}

std::vector<RewardScore> Evaluator::evaluate_batch(std::span<const Latent> xs, const RngStream& stream) {
  const std::size_t count = std::min(xs.size(), remaining());
  calls_.fetch_add(count);
  std::vector<std::optional<RewardScore>> slots(count);
  parallel_for(count, workers_, [&](std::size_t i) { slots[i] = fn_(xs[i], stream.derive(i)); });
  std::vector<RewardScore> out;
  out.reserve(count);
  for (auto& s : slots) out.push_back(*s);
  return out;
}

SearchState SearchState::initial(const Latent& z0) {
  return SearchState{.round = 0, .start = z0, .base = z0, .base_reward = {}, .last_gradient = {},
                     .last_perturbations = {}, .last_round_best = {}, .last_round = {}, .global_best = {},
                     .history = {}, .truncated = false};
}

SearchState coarse_round(SearchState state, const SearchConfig& cfg, Evaluator& eval, const RngStream& stream) {
  const int t = state.round + 1;
  if (t % 2 != 1) throw PreconditionError("coarse_round: round must be odd");
  const RngStream rs = stream.derive(static_cast<std::uint64_t>(t));
  RoundSummary summary;
  summary.round = t;
  summary.kind = RoundKind::kCoarse;

  if (t > 1) {
    // Greedy relocation: strict improvement over the previous base, else restart.
    if (state.last_round_best && state.base_reward && state.last_round_best->reward > *state.base_reward) {
      state.base = state.last_round_best->latent;
      summary.relocated = true;
    } else {
      state.base = cfg.pin_fallback ? state.start : sample_gaussian(rs.derive(kFreshBase), state.base.dim());
      summary.resampled = true;
    }
  }
  state.round = t;
  state.last_gradient.reset();
  state.last_round.clear();
  state.last_round_best.reset();

  const auto base_reward = eval.evaluate(state.base, rs.derive(kBaseEval));
  if (!base_reward) {
    state.base_reward.reset();
    state.truncated = true;
    state.history.push_back(summary);
    return state;
  }
  state.base_reward = base_reward;
  summary.evaluations = 1;
  offer_global_best(state, state.base, *base_reward);
  offer_round_best(summary, *base_reward);

  NeighborSet set = random_spherical_sample(state.base, cfg.n_neighbors, cfg.tau, rs.derive(kNeighbors));
  auto rewards = eval.evaluate_batch(set.candidates, rs.derive(kCandidateEval));
  record_candidates(state, summary, set, rewards);
  state.history.push_back(summary);
  if (rewards.size() < set.candidates.size()) {
    state.truncated = true;
    return state;
  }

  set.rewards = std::move(rewards);
  state.last_gradient = estimate_gradient(*base_reward, set);
  state.last_perturbations = std::move(set.perturbations);
  return state;
}

SearchState fine_round(SearchState state, const SearchConfig& cfg, Evaluator& eval, const RngStream& stream) {
  const int t = state.round + 1;
  if (t % 2 != 0) throw PreconditionError("fine_round: round must be even");
  if (!state.last_gradient || state.last_perturbations.empty()) {
    throw PreconditionError("fine_round: no gradient from a preceding coarse round");
  }
  const RngStream rs = stream.derive(static_cast<std::uint64_t>(t));
  RoundSummary summary;
  summary.round = t;
  summary.kind = RoundKind::kFine;

  std::optional<NeighborSet> set;
  try {
    set = guided_spherical_sample(state.base, cfg.n_neighbors, cfg.tau, cfg.alpha, state.last_gradient->g,
                                  state.last_perturbations, rs.derive(kNeighbors));
  } catch (const GradientDegenerateError&) {
    set = random_spherical_sample(state.base, cfg.n_neighbors, cfg.tau, rs.derive(kFallbackNeighbors));
    summary.fell_back = true;
  } catch (const DegeneratePerturbationError&) {
    // A previous tangent exactly opposite the gradient cancels under the blend.
    set = random_spherical_sample(state.base, cfg.n_neighbors, cfg.tau, rs.derive(kFallbackNeighbors));
    summary.fell_back = true;
  }
  state.round = t;
  // Gradients never carry across a cycle boundary.
  state.last_gradient.reset();

  auto rewards = eval.evaluate_batch(set->candidates, rs.derive(kCandidateEval));
  record_candidates(state, summary, *set, rewards);
  state.history.push_back(summary);
  state.last_perturbations = std::move(set->perturbations);
  if (rewards.size() < set->candidates.size()) state.truncated = true;
  return state;
}

SearchResult run_search(const Latent& z0, const SearchConfig& cfg, Evaluator& eval, const RngStream& stream) {
  cfg.validate();
  SearchState state = SearchState::initial(z0);
  for (int t = 1; t <= cfg.rounds && !state.truncated; ++t) {
    state = (t % 2 == 1) ? coarse_round(std::move(state), cfg, eval, stream)
                         : fine_round(std::move(state), cfg, eval, stream);
  }

  SearchResult result{z0, std::nullopt, std::move(state.history), state.truncated};
  std::optional<ScoredLatent> chosen;
  if (!cfg.track_global_best && !state.last_round.empty()) {
    chosen = *std::max_element(state.last_round.begin(), state.last_round.end(),
                               [](const auto& a, const auto& b) { return a.reward < b.reward; });
  } else {
    chosen = state.global_best;
  }
  if (chosen) {
    result.best = chosen->latent;
    result.reward = chosen->reward;
  }
  return result;
}

std::size_t search_evaluation_count(const SearchConfig& cfg) {
  const auto t = static_cast<std::size_t>(cfg.rounds);
  return t * static_cast<std::size_t>(cfg.n_neighbors) + (t + 1) / 2;
}

}  // namespace rts
