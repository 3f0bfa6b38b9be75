#pragma once

#include <atomic>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "rts/core.hpp"
#include "rts/rng.hpp"
#include "rts/sphere.hpp"
#include "rts/surrogate.hpp"

namespace rts {

struct SearchConfig {
  int n_neighbors = 3;
  int rounds = 4;
  double tau = 0.9;
  double alpha = 0.7;
  // true: return the best point ever evaluated. false: return the argmax of
  // the final round's candidates only.
  bool track_global_best = true;
  // When relocation fails, reuse the search's starting point instead of
  // drawing a fresh N(0, I) base.
  bool pin_fallback = false;

  void validate() const;
};

// Wraps the black-box reward R(denoise(.)) and counts calls. An optional call
// cap truncates evaluation: batches evaluate the longest prefix that fits.
class Evaluator {
 public:
  using Fn = std::function<RewardScore(const Latent&, const RngStream&)>;

  explicit Evaluator(Fn fn, std::optional<std::size_t> max_calls = std::nullopt, unsigned workers = 1);

  std::size_t calls() const { return calls_.load(); }
  std::size_t remaining() const;
  bool exhausted() const { return remaining() == 0; }

  // Returns std::nullopt when the cap is reached.
  std::optional<RewardScore> evaluate(const Latent& x, const RngStream& stream);
  // Candidate i receives stream.derive(i). May return fewer results than
  // candidates when the cap is hit.
  std::vector<RewardScore> evaluate_batch(std::span<const Latent> xs, const RngStream& stream);

 private:
  Fn fn_;
  std::optional<std::size_t> max_calls_;
  unsigned workers_;
  std::atomic<std::size_t> calls_{0};
};

struct ScoredLatent {
  Latent latent;
  RewardScore reward;
};

enum class RoundKind { kCoarse, kFine };

struct RoundSummary {
  int round = 0;
  RoundKind kind = RoundKind::kCoarse;
  std::optional<RewardScore> best_reward;  // max over everything evaluated this round
  bool relocated = false;                  // coarse: base moved to the previous best neighbor
  bool resampled = false;                  // coarse: base redrawn (round > 1, relocation failed)
  bool fell_back = false;                  // fine: degenerate gradient, random neighbors used
  std::size_t evaluations = 0;
};

// Bookkeeping between rounds. `round` counts completed rounds; the next
// call runs round + 1 (coarse when odd, fine when even).
struct SearchState {
  int round = 0;
  Latent start;
  Latent base;
  std::optional<RewardScore> base_reward;
  std::optional<SurrogateGradient> last_gradient;
  std::vector<TangentPerturbation> last_perturbations;
  std::optional<ScoredLatent> last_round_best;  // m*_{t-1} used by relocation
  std::vector<ScoredLatent> last_round;         // M_t with rewards, for the strict return
  std::optional<ScoredLatent> global_best;
  std::vector<RoundSummary> history;
  bool truncated = false;

  static SearchState initial(const Latent& z0);
};

SearchState coarse_round(SearchState state, const SearchConfig& cfg, Evaluator& eval, const RngStream& stream);
SearchState fine_round(SearchState state, const SearchConfig& cfg, Evaluator& eval, const RngStream& stream);

struct SearchResult {
  Latent best;
  std::optional<RewardScore> reward;  // empty only if nothing could be evaluated
  std::vector<RoundSummary> history;
  bool truncated = false;
};

// Alternates coarse (odd t) and fine (even t) rounds. Round 1 uses z0 as its
// base; callers that want a fresh N(0, I) start pass a fresh draw.
SearchResult run_search(const Latent& z0, const SearchConfig& cfg, Evaluator& eval, const RngStream& stream);

// Evaluations run_search performs without truncation: T*N + ceil(T/2).
std::size_t search_evaluation_count(const SearchConfig& cfg);

}  // namespace rts
