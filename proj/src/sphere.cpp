#include "rts/sphere.hpp"

#include <cmath>

namespace rts {
namespace {

constexpr double kUnitTol = 1e-9;
constexpr double kDegenerateNorm = 1e-12;

Latent unit_direction(const Latent& base) {
  const double r = base.norm();
  if (!(r > 0.0)) throw PreconditionError("spherical sample: base has zero norm");
  return Latent(base.values() / r);
}

void check_tau(double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw PreconditionError("tau must lie in [0, 1]");
}

}  // namespace

TangentPerturbation::TangentPerturbation(Latent direction, const Latent& u) : direction_(std::move(direction)) {
  if (direction_.dim() != u.dim()) throw DimensionError("tangent perturbation: dimension mismatch");
  if (std::abs(direction_.norm() - 1.0) > 1e-12) {
    throw PreconditionError("tangent perturbation is not unit norm");
  }
  if (std::abs(direction_.dot(u)) > 1e-12) {
    throw PreconditionError("tangent perturbation is not orthogonal to the base direction");
  }
}

Latent tangent_project(const Latent& w, const Latent& u) {
  if (w.dim() != u.dim()) throw DimensionError("tangent_project: dimension mismatch");
  if (std::abs(u.norm() - 1.0) > kUnitTol) throw PreconditionError("tangent_project: u is not unit norm");
  Eigen::VectorXd p = w.values() - w.dot(u) * u.values();
  // Second Gram-Schmidt pass pulls |<p,u>| down to rounding level.
  p -= p.dot(u.values()) * u.values();
  if (p.norm() < kDegenerateNorm) {
    throw DegeneratePerturbationError("tangent_project: perturbation is parallel to the base direction");
  }
  return Latent(std::move(p));
}

Latent cone_point(const Latent& u, double radius, double tau, const Latent& w) {
  const double s = std::sqrt(std::max(0.0, 1.0 - tau * tau));
  return Latent(radius * (tau * u.values() + s * w.values()));
}

NeighborSet random_spherical_sample(const Latent& base, int n, double tau, const RngStream& stream) {
  if (n < 1) throw PreconditionError("random_spherical_sample: n must be >= 1");
  check_tau(tau);
  const Latent u = unit_direction(base);
  const double radius = base.norm();

  NeighborSet set{base, {}, {}, std::nullopt};
  set.candidates.reserve(n);
  set.perturbations.reserve(n);
  for (int i = 0; i < n; ++i) {
    const RngStream candidate_stream = stream.derive(static_cast<std::uint64_t>(i));
    std::optional<Latent> tangent;
    for (int attempt = 0; attempt <= kMaxTangentRedraws && !tangent; ++attempt) {
      try {
        tangent = tangent_project(sample_gaussian(candidate_stream.derive(attempt), base.dim()), u);
      } catch (const DegeneratePerturbationError&) {
      }
    }
    if (!tangent) throw DegeneratePerturbationError("random_spherical_sample: redraw limit reached");
    Latent w(tangent->values() / tangent->norm());
    set.candidates.push_back(cone_point(u, radius, tau, w));
    set.perturbations.emplace_back(std::move(w), u);
  }
  return set;
}

NeighborSet guided_spherical_sample(const Latent& base, int n, double tau, double alpha, const Latent& g,
                                    std::span<const TangentPerturbation> prev_perturbations,
                                    const RngStream& /*stream*/) {
  if (n < 1 || static_cast<std::size_t>(n) != prev_perturbations.size()) {
    throw PreconditionError("guided_spherical_sample: n must equal the number of previous perturbations");
  }
  check_tau(tau);
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw PreconditionError("alpha must lie in [0, 1]");
  if (g.dim() != base.dim()) throw DimensionError("guided_spherical_sample: gradient dimension mismatch");

  const Latent u = unit_direction(base);
  const double radius = base.norm();
  Eigen::VectorXd g_perp = g.values() - g.dot(u) * u.values();
  g_perp -= g_perp.dot(u.values()) * u.values();
  const double g_norm = g_perp.norm();
  if (g_norm < kDegenerateNorm) {
    throw GradientDegenerateError("guided_spherical_sample: projected gradient vanishes");
  }
  const Eigen::VectorXd g_dir = g_perp / g_norm;

  NeighborSet set{base, {}, {}, std::nullopt};
  set.candidates.reserve(n);
  set.perturbations.reserve(n);
  for (const auto& prev : prev_perturbations) {
    if (prev.direction().dim() != base.dim()) throw DimensionError("guided_spherical_sample: perturbation dimension");
    Eigen::VectorXd w = (1.0 - alpha) * prev.direction().values() + alpha * g_dir;
    // The previous tangents belong to the same base, but re-project so the
    // orthogonality bound holds after blending.
    w -= w.dot(u.values()) * u.values();
    const double w_norm = w.norm();
    if (w_norm < kDegenerateNorm) {
      throw DegeneratePerturbationError("guided_spherical_sample: blended perturbation vanishes");
    }
    Latent w_hat(w / w_norm);
    set.candidates.push_back(cone_point(u, radius, tau, w_hat));
    set.perturbations.emplace_back(std::move(w_hat), u);
  }
  return set;
}

}  // namespace rts
