#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "rts/core.hpp"

namespace rts {

struct NoiseTrajectory;

// A denoising path projected onto its top three principal directions.
struct ProjectedTrajectory {
  std::vector<Eigen::Vector3d> points;  // one per latent, centered
  Eigen::MatrixXd components;           // d x min(d, 3), orthonormal columns
  Eigen::Vector3d singular_values;      // non-increasing; zero-padded when d < 3
  Eigen::VectorXd mean;
  bool low_rank = false;                // fewer than three non-negligible directions
};

enum class CurvatureKind {
  kMenger,        // 4 * area / (product of side lengths) = 1 / circumradius
  kTurningAngle,  // angle between consecutive segments, radians
};

struct KeyStepSet {
  std::vector<int> indices;  // sorted by curvature descending, ties by index
  std::vector<double> curvatures;
};

// PCA of the per-step latents via SVD of the mean-centered step matrix.
ProjectedTrajectory project_trajectory(std::span<const Latent> latents);
ProjectedTrajectory project_trajectory(const NoiseTrajectory& traj);

// Discrete curvature at interior point l of a polyline.
double curvature(std::span<const Eigen::Vector3d> points, int l, CurvatureKind kind = CurvatureKind::kMenger);

// Curvature of every point; endpoints report 0.
std::vector<double> curvature_profile(std::span<const Eigen::Vector3d> points,
                                      CurvatureKind kind = CurvatureKind::kMenger);

KeyStepSet select_key_steps(const ProjectedTrajectory& proj, int k, CurvatureKind kind = CurvatureKind::kMenger);

}  // namespace rts
