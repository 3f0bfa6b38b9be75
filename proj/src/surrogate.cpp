#include "rts/surrogate.hpp"

#include <algorithm>
#include <cmath>

namespace rts {

SurrogateGradient estimate_gradient(RewardScore base_reward, const NeighborSet& neighbors) {
  if (!neighbors.rewards) throw PreconditionError("estimate_gradient: neighbor rewards are missing");
  const auto& rewards = *neighbors.rewards;
  if (rewards.size() != neighbors.perturbations.size() || rewards.empty()) {
    throw PreconditionError("estimate_gradient: rewards and perturbations differ in length");
  }

  double denom = base_reward.value();
  for (const auto& r : rewards) denom += r.value();
  if (!std::isfinite(denom)) throw NonFiniteError("estimate_gradient: reward sum overflow");
  // Normalize by the magnitude only: with negative rewards a signed sum would
  // turn the ascent direction into a descent direction.
  denom = std::max(std::abs(denom), kSurrogateDenominatorFloor);

  Eigen::VectorXd g = Eigen::VectorXd::Zero(neighbors.base.dim());
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    g += ((rewards[i].value() - base_reward.value()) / denom) * neighbors.perturbations[i].direction().values();
  }
  require_finite(g, "surrogate gradient");
  return SurrogateGradient{Latent(std::move(g)), base_reward, rewards};
}

}  // namespace rts
