#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rts/stats.hpp"
#include "rts/surrogate.hpp"

using namespace rts;

namespace {

NeighborSet single(double reward_m) {
  const Latent base{1, 0};
  const Latent u{1, 0};
  NeighborSet set{base, {Latent{0, 1}}, {TangentPerturbation(Latent{0, 1}, u)}, std::vector{RewardScore(reward_m)}};
  return set;
}

std::vector<RewardScore> scores(const std::vector<double>& xs) {
  std::vector<RewardScore> out;
  for (double x : xs) out.emplace_back(x);
  return out;
}

}  // namespace

TEST_CASE("equal rewards give a zero gradient") {
  auto set = random_spherical_sample(Latent{1, 2, 3, 4}, 5, 0.8, RngStream(1));
  set.rewards = scores({0.7, 0.7, 0.7, 0.7, 0.7});
  CHECK(estimate_gradient(RewardScore(0.7), set).g.norm() == 0.0);
}

TEST_CASE("single-neighbor substitutions") {
  CHECK((estimate_gradient(RewardScore(1.0), single(2.0)).g.values() - Eigen::Vector2d(0, 1.0 / 3.0)).norm() < 1e-12);
  CHECK((estimate_gradient(RewardScore(1.0), single(0.0)).g.values() - Eigen::Vector2d(0, -1.0)).norm() < 1e-12);
}

TEST_CASE("denominator is a floored magnitude") {
  // Sum 0.5 + (-0.5) = 0 -> 1e-8.
  const auto zero = estimate_gradient(RewardScore(-0.5), single(0.5));
  CHECK(zero.g[1] == doctest::Approx(1.0 / kSurrogateDenominatorFloor));
  // Sum -3, numerator -1 + 2 = 1: still points towards the better neighbor.
  const auto neg = estimate_gradient(RewardScore(-2.0), single(-1.0));
  CHECK(std::abs(neg.g[1] - 1.0 / 3.0) < 1e-12);
  // |D| tiny but negative.
  const auto tiny = estimate_gradient(RewardScore(-1e-10), single(-1e-10));
  CHECK(tiny.g.norm() == 0.0);
}

TEST_CASE("missing or mismatched rewards are rejected") {
  auto set = single(1.0);
  set.rewards.reset();
  CHECK_THROWS_AS(estimate_gradient(RewardScore(1.0), set), PreconditionError);
  set.rewards = scores({1.0, 2.0});
  CHECK_THROWS_AS(estimate_gradient(RewardScore(1.0), set), PreconditionError);
}

TEST_CASE("gradient stays in the tangent span and is scale invariant") {
  const Latent base = sample_gaussian(RngStream(2), 12);
  auto set = random_spherical_sample(base, 6, 0.6, RngStream(3));
  set.rewards = scores({0.3, 1.2, 0.8, 0.1, 2.0, 0.9});
  const auto g = estimate_gradient(RewardScore(0.5), set);
  const Eigen::VectorXd u = base.values().normalized();
  CHECK(std::abs(g.g.values().dot(u)) < 1e-12);
  CHECK(g.neighbor_rewards.size() == 6);

  auto scaled = set;
  scaled.rewards = scores({0.9, 3.6, 2.4, 0.3, 6.0, 2.7});
  CHECK((estimate_gradient(RewardScore(1.5), scaled).g.values() - g.g.values()).norm() < 1e-12);
}

TEST_CASE("surrogate gradient aligns with the true gradient on a quadratic") {
  const int d = 32;
  const int n = 16;
  const double tau = 0.99;
  const int trials = 500;
  std::vector<double> cosines;
  for (int t = 0; t < trials; ++t) {
    const RngStream s(77, {static_cast<std::uint64_t>(t)});
    const Latent z = sample_gaussian(s.derive(0), d);
    const Latent target = sample_gaussian(s.derive(1), d);
    auto reward = [&](const Latent& x) { return -(x.values() - target.values()).squaredNorm(); };
    auto set = random_spherical_sample(z, n, tau, s.derive(2));
    std::vector<RewardScore> rs;
    for (const auto& m : set.candidates) rs.emplace_back(reward(m));
    set.rewards = rs;
    const auto g = estimate_gradient(RewardScore(reward(z)), set);

    // Analytic gradient -2 (z - z*), projected onto the tangent space at z.
    const Eigen::VectorXd u = z.values().normalized();
    Eigen::VectorXd grad = -2.0 * (z.values() - target.values());
    grad -= grad.dot(u) * u;
    cosines.push_back(g.g.values().dot(grad) / (g.g.norm() * grad.norm()));
  }
  const double mean_cos = stats::mean(cosines);
  MESSAGE("mean cosine to analytic gradient: " << mean_cos);
  CHECK(mean_cos > 0.0);
  CHECK(stats::sign_test_greater(cosines) < 0.01);
}
