#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "rts/pipeline.hpp"
#include "rts/stats.hpp"

using namespace rts;

namespace {

MixtureModel four_mode(int d = 2) {
  std::vector<Latent> means;
  for (auto [a, b] : {std::pair{2.0, 2.0}, {-2.0, 2.0}, {-2.0, -2.0}, {2.0, -2.0}}) {
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(d);
    mu[0] = a;
    mu[1] = b;
    means.emplace_back(mu);
  }
  return MixtureModel({0.25, 0.25, 0.25, 0.25}, means, {0.5, 0.5, 0.5, 0.5});
}

RtsConfig small_config(int n, int t_init, int t_inter, int k) {
  RtsConfig cfg;
  cfg.search_init = {n, t_init, 0.8, 0.7, true, false};
  cfg.search_inter = {n, t_inter, 0.8, 0.7, true, false};
  cfg.k_keysteps = k;
  return cfg;
}

void check_same(const RunResult& a, const RunResult& b) {
  CHECK(a.final_sample == b.final_sample);
  CHECK(a.final_reward == b.final_reward);
  CHECK(a.nfe_used == b.nfe_used);
  CHECK(a.round_history == b.round_history);
  CHECK(a.truncated == b.truncated);
  CHECK(a.key_steps.has_value() == b.key_steps.has_value());
  if (a.key_steps && b.key_steps) CHECK(a.key_steps->indices == b.key_steps->indices);
  CHECK(a.final_init == b.final_init);
  CHECK(a.final_injected == b.final_injected);
}

}  // namespace

TEST_CASE("method names") {
  for (auto m : {Method::kRts, Method::kBon, Method::kZo, Method::kFree}) CHECK(method_from_string(to_string(m)) == m);
  CHECK_THROWS_AS(method_from_string("best_of_n"), ConfigError);
}

TEST_CASE("ledger formula equals the counter across configurations") {
  struct Row {
    int n, t_init, t_inter, k, steps;
    bool sde;
    std::optional<int> eval_init;
    int eval_inter;
  };
  const std::vector<Row> table{
      {3, 4, 2, 6, 50, true, std::nullopt, 1}, {3, 4, 2, 6, 20, true, std::nullopt, 1},
      {1, 1, 1, 1, 10, true, std::nullopt, 1}, {5, 3, 2, 3, 30, true, 5, 2},
      {2, 6, 4, 4, 25, true, std::nullopt, 3}, {3, 4, 2, 0, 50, true, std::nullopt, 1},
      {3, 0, 2, 6, 40, true, std::nullopt, 1}, {4, 5, 2, 6, 16, false, std::nullopt, 1},
      {3, 2, 3, 8, 12, true, 1, 1},           {2, 4, 2, 11, 12, true, std::nullopt, 1},
  };
  const auto model = four_mode(3);
  const RewardModel reward = mode_preference(model, 0, 0.7);
  for (const auto& row : table) {
    const SolverSpec spec = row.sde ? SolverSpec::sde(row.steps, 0.7) : SolverSpec::ode(row.steps);
    RtsConfig cfg = small_config(row.n, row.t_init, row.t_inter, row.k);
    cfg.eval_steps_init = row.eval_init;
    cfg.eval_steps_inter = row.eval_inter;
    for (std::uint64_t seed : {1, 2, 3}) {
      const auto result = run_rts(model, spec, reward, cfg, RngStream(seed));
      const auto ledger = planned_nfe(spec, cfg, result.key_steps);
      CHECK(result.nfe_used == ledger.total());
      CHECK(result.nfe_used <= max_planned_nfe(spec, cfg));
      CHECK_FALSE(result.truncated);
    }
  }
}

TEST_CASE("ledger arithmetic for the default configuration") {
  const auto spec = SolverSpec::sde(50, 1.0);
  const RtsConfig cfg;
  const KeyStepSet keys{{5, 30, 12, 44, 8, 20}, {}};
  const auto ledger = planned_nfe(spec, cfg, keys);
  CHECK(ledger.initial == 14u * 100u);  // 4 rounds x 3 neighbors + 2 base evaluations
  CHECK(ledger.record == 100u);
  CHECK(ledger.replay == 2u * 40u);     // steps 5..44
  CHECK(ledger.intermediate == 6u * 7u);
  CHECK(ledger.final == 100u);
  CHECK(ledger.total() == 1400u + 100u + 80u + 42u + 100u);
  CHECK(max_planned_nfe(spec, cfg) == 1400u + 100u + 98u + 42u + 100u);
  CHECK_THROWS_AS(planned_nfe(spec, cfg, std::nullopt), PreconditionError);
}

TEST_CASE("phase decomposition") {
  const auto model = four_mode();
  const RewardModel reward = mode_preference(model, 0, 0.5);
  const auto spec = SolverSpec::sde(30, 0.5);

  RtsConfig no_inter;
  no_inter.k_keysteps = 0;
  const auto a = run_rts(model, spec, reward, no_inter, RngStream(4));
  CHECK(a.nfe_used == search_evaluation_count(no_inter.search_init) * 60 + 60);
  CHECK_FALSE(a.key_steps.has_value());
  CHECK(a.round_history.intermediate.empty());
  CHECK(planned_nfe(spec, no_inter, std::nullopt).intermediate == 0);

  RtsConfig no_init;
  no_init.search_init.rounds = 0;
  const auto b = run_rts(model, spec, reward, no_init, RngStream(4));
  const auto ledger = planned_nfe(spec, no_init, b.key_steps);
  CHECK(ledger.initial == 0);
  CHECK(b.round_history.initial.empty());
  CHECK(b.nfe_used == ledger.total());
  // Without the initial phase the starting noise is the shared one.
  CHECK(b.final_init == run_free(model, spec, reward, RngStream(4)).final_init);
}

TEST_CASE("ODE with k = 0 is initial-noise search only") {
  const auto model = four_mode();
  const RewardModel reward = mode_preference(model, 1, 0.5);
  RtsConfig cfg;
  cfg.k_keysteps = 0;
  const auto ode = SolverSpec::ode(20);
  const auto r = run_rts(model, ode, reward, cfg, RngStream(9));
  CHECK_FALSE(r.key_steps.has_value());
  CHECK(r.final_injected.empty());
  CHECK(r.nfe_used == 14u * 40u + 40u);
  // Non-zero k is ignored in ODE mode: no path noise exists.
  cfg.k_keysteps = 6;
  check_same(r, run_rts(model, ode, reward, cfg, RngStream(9)));
}

TEST_CASE("replay of the chosen noises reproduces the final sample") {
  const auto model = four_mode();
  const RewardModel reward = mode_preference(model, 0, 0.5);
  for (const auto& spec : {SolverSpec::sde(40, 0.5), SolverSpec::ode(40)}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto r = run_rts(model, spec, reward, RtsConfig{}, RngStream(seed));
      NfeCounter nfe;
      const auto replay =
          denoise(model, spec, r.final_init, std::span<const Latent>(r.final_injected), RngStream(12345), nfe);
      CHECK(replay.final_sample() == r.final_sample);
      CHECK(evaluate_reward(reward, replay.final_sample()) == r.final_reward);
    }
  }
}

TEST_CASE("key steps come from the recorded trajectory and only their noises change") {
  const auto model = four_mode();
  const RewardModel reward = mode_preference(model, 0, 0.5);
  const auto spec = SolverSpec::sde(40, 0.5);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto r = run_rts(model, spec, reward, RtsConfig{}, RngStream(seed));
    const auto free = run_free(model, spec, reward, RngStream(seed));
    NfeCounter nfe;
    const auto recorded =
        denoise(model, spec, r.final_init, std::span<const Latent>(free.final_injected), RngStream(0), nfe);
    REQUIRE(r.key_steps.has_value());
    CHECK(select_key_steps(project_trajectory(recorded), 6).indices == r.key_steps->indices);
    CHECK(r.round_history.intermediate.size() == 6u * 2u);

    std::vector<bool> key(spec.steps + 1, false);
    for (int l : r.key_steps->indices) key[l] = true;
    for (int i = 0; i < spec.injected_count(); ++i) {
      if (!key[i + 1]) CHECK(r.final_injected[i] == free.final_injected[i]);
    }
  }
}

TEST_CASE("budget is never exceeded") {
  const auto model = four_mode();
  const RewardModel reward = mode_preference(model, 0, 0.5);
  const auto spec = SolverSpec::sde(20, 0.5);
  const std::uint64_t full = denoise_cost(spec);
  for (std::uint64_t budget : {40ull, 79ull, 80ull, 81ull, 150ull, 333ull, 500ull, 700ull, 1000ull}) {
    RtsConfig cfg;
    cfg.budget_nfe = budget;
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      const auto r = run_rts(model, spec, reward, cfg, RngStream(seed));
      CHECK(r.nfe_used <= budget);
      if (budget < max_planned_nfe(spec, RtsConfig{})) CHECK(r.truncated);
      NfeCounter nfe;
      CHECK(denoise(model, spec, r.final_init, std::span<const Latent>(r.final_injected), RngStream(0), nfe)
                .final_sample() == r.final_sample);
    }
  }
  RtsConfig tiny;
  tiny.budget_nfe = full - 1;
  CHECK_THROWS_AS(run_rts(model, spec, reward, tiny, RngStream(0)), BudgetError);

  RtsConfig ample;
  ample.budget_nfe = max_planned_nfe(spec, ample);
  for (std::uint64_t seed = 0; seed < 4; ++seed) CHECK_FALSE(run_rts(model, spec, reward, ample, RngStream(seed)).truncated);
}

TEST_CASE("rts is deterministic and independent of worker count") {
  const auto model = four_mode();
  const RewardModel reward = mode_preference(model, 0, 0.5);
  const auto spec = SolverSpec::sde(30, 0.5);
  RtsConfig one;
  RtsConfig many;
  many.workers = 6;
  for (std::uint64_t seed : {0, 17}) {
    const auto a = run_rts(model, spec, reward, one, RngStream(seed));
    check_same(a, run_rts(model, spec, reward, one, RngStream(seed)));
    check_same(a, run_rts(model, spec, reward, many, RngStream(seed)));
  }
}

TEST_CASE("best-of-n") {
  const auto model = four_mode();
  const RewardModel reward = mode_preference(model, 2, 0.5);
  const auto ode = SolverSpec::ode(50);
  const auto r = run_bon(model, ode, reward, 1000, RngStream(3));
  CHECK(r.round_history.initial.size() == 10);
  CHECK(r.nfe_used == 1000);
  CHECK(r.final_reward.value() == *std::max_element(r.round_history.initial.begin(), r.round_history.initial.end()));

  const auto one = run_bon(model, ode, reward, 100, RngStream(3));
  const auto free = run_free(model, ode, reward, RngStream(3));
  CHECK(one.final_sample == free.final_sample);
  CHECK_THROWS_AS(run_bon(model, ode, reward, 99, RngStream(3)), BudgetError);

  const auto sde = SolverSpec::sde(25, 0.5);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto small = run_bon(model, sde, reward, 500, RngStream(seed));
    const auto large = run_bon(model, sde, reward, 1000, RngStream(seed), 4);
    CHECK(large.final_reward >= small.final_reward);
    NfeCounter nfe;
    CHECK(denoise(model, sde, large.final_init, std::span<const Latent>(large.final_injected), RngStream(0), nfe)
              .final_sample() == large.final_sample);
  }
  check_same(run_bon(model, sde, reward, 700, RngStream(5), 1), run_bon(model, sde, reward, 700, RngStream(5), 8));
}

TEST_CASE("zeroth-order hill climbing") {
  const auto model = four_mode();
  const auto spec = SolverSpec::sde(20, 0.5);
  const RewardModel constant = CustomReward{[](const Latent&) { return 1.0; }};
  const auto flat = run_zo(model, spec, constant, 400, 0.8, RngStream(2));
  CHECK(flat.final_sample == run_free(model, spec, constant, RngStream(2)).final_sample);
  CHECK(flat.nfe_used == 400);

  const RewardModel quad = QuadraticReward{Latent{1, -1}};
  const auto climb = run_zo(model, spec, quad, 2000, 0.9, RngStream(3));
  const auto& h = climb.round_history.initial;
  CHECK(h.size() == 50);
  for (std::size_t i = 1; i < h.size(); ++i) CHECK(h[i] >= h[i - 1]);
  CHECK(climb.final_reward.value() == h.back());

  CHECK_THROWS_AS(run_zo(model, spec, quad, 79, 0.9, RngStream(3)), BudgetError);
  CHECK_THROWS_AS(run_zo(model, spec, quad, 400, 1.5, RngStream(3)), PreconditionError);
}

TEST_CASE("zeroth-order search beats the unguided sampler on a quadratic") {
  const auto model = four_mode();
  const auto spec = SolverSpec::sde(20, 0.5);
  const RewardModel quad = QuadraticReward{Latent{0.5, 1.0}};
  std::vector<double> zo, free;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    zo.push_back(run_zo(model, spec, quad, 400, 0.9, RngStream(seed)).final_reward.value());
    free.push_back(run_free(model, spec, quad, RngStream(seed)).final_reward.value());
  }
  CHECK(stats::rank_sum_greater(zo, free) < 0.01);
}
