#pragma once

#include <optional>
#include <span>
#include <vector>

#include "rts/core.hpp"
#include "rts/rng.hpp"

namespace rts {

// Unit direction orthogonal to a base direction u.
class TangentPerturbation {
 public:
  // Validates unit norm and orthogonality to `u` (1e-12 tolerances).
  TangentPerturbation(Latent direction, const Latent& u);

  const Latent& direction() const { return direction_; }

 private:
  Latent direction_;
};

struct NeighborSet {
  Latent base;
  std::vector<Latent> candidates;
  std::vector<TangentPerturbation> perturbations;
  std::optional<std::vector<RewardScore>> rewards;
};

// Maximum redraws when a Gaussian draw is (numerically) parallel to u.
inline constexpr int kMaxTangentRedraws = 8;

// w - <w,u>u for unit u.
Latent tangent_project(const Latent& w, const Latent& u);

// Cone sample: m_i = |base| (tau u + sqrt(1 - tau^2) w_i), w_i a random unit
// tangent. Every candidate keeps the base norm and sits at cos-angle tau.
NeighborSet random_spherical_sample(const Latent& base, int n, double tau, const RngStream& stream);

// Same cone, but each previous tangent is blended towards the projected
// gradient direction: w_i = (1 - alpha) w'_i + alpha g_perp/|g_perp|, then
// renormalized. Throws GradientDegenerateError when |g_perp| < 1e-12.
NeighborSet guided_spherical_sample(const Latent& base, int n, double tau, double alpha, const Latent& g,
                                    std::span<const TangentPerturbation> prev_perturbations,
                                    const RngStream& stream);

// Builds m = radius (tau u + sqrt(1 - tau^2) w) for a unit tangent w.
Latent cone_point(const Latent& u, double radius, double tau, const Latent& w);

}  // namespace rts
