#pragma once

#include <vector>

#include "rts/core.hpp"
#include "rts/sphere.hpp"

namespace rts {

struct SurrogateGradient {
  Latent g;
  RewardScore base_reward;
  std::vector<RewardScore> neighbor_rewards;
};

// Floor on D = |sum_i R(m_i) + R(z)|.
inline constexpr double kSurrogateDenominatorFloor = 1e-8;

// g = sum_i [(R(m_i) - R(z)) / D] w_i with D = max(|sum_j R(m_j) + R(z)|, floor).
// Requires neighbors.rewards to be populated.
SurrogateGradient estimate_gradient(RewardScore base_reward, const NeighborSet& neighbors);

}  // namespace rts
