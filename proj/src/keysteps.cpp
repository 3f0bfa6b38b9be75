#include "rts/keysteps.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Geometry>
#include <Eigen/SVD>

#include "rts/sim.hpp"

namespace rts {
namespace {

constexpr double kMinSegment = 1e-12;
// Below this sine of the corner angle, three points count as collinear.
constexpr double kCollinearSine = 1e-12;
constexpr double kLowRankRatio = 1e-10;

}  // namespace

ProjectedTrajectory project_trajectory(std::span<const Latent> latents) {
  if (latents.size() < 4) throw PreconditionError("project_trajectory: need at least 4 latents");
  const auto n = static_cast<Eigen::Index>(latents.size());
  const Eigen::Index d = latents.front().dim();

  Eigen::MatrixXd x(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (latents[i].dim() != d) throw DimensionError("project_trajectory: latents differ in dimension");
    x.row(i) = latents[i].values().transpose();
  }
  ProjectedTrajectory proj;
  proj.mean = x.colwise().mean().transpose();
  x.rowwise() -= proj.mean.transpose();

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinV);
  const Eigen::Index kept = std::min<Eigen::Index>(3, svd.matrixV().cols());
  proj.components = svd.matrixV().leftCols(kept);
  proj.singular_values.setZero();
  proj.singular_values.head(kept) = svd.singularValues().head(kept);

  const Eigen::MatrixXd coords = x * proj.components;
  proj.points.reserve(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Vector3d p = Eigen::Vector3d::Zero();
    p.head(kept) = coords.row(i).transpose();
    proj.points.push_back(p);
  }
  const double top = proj.singular_values[0];
  proj.low_rank = kept < 3 || top == 0.0 || proj.singular_values[2] <= kLowRankRatio * top;
  return proj;
}

ProjectedTrajectory project_trajectory(const NoiseTrajectory& traj) { return project_trajectory(traj.latents); }

double curvature(std::span<const Eigen::Vector3d> points, int l, CurvatureKind kind) {
  if (l < 1 || static_cast<std::size_t>(l) + 1 >= points.size()) {
    throw PreconditionError("curvature: index must be an interior point");
  }
  const Eigen::Vector3d& a = points[l - 1];
  const Eigen::Vector3d& b = points[l];
  const Eigen::Vector3d& c = points[l + 1];
  const double ab = (b - a).norm();
  const double bc = (c - b).norm();
  const double ca = (a - c).norm();
  if (ab < kMinSegment || bc < kMinSegment || ca < kMinSegment) return 0.0;

  const double cross = (b - a).cross(c - b).norm();
  if (cross <= kCollinearSine * ab * bc) return 0.0;
  if (kind == CurvatureKind::kTurningAngle) {
    return std::atan2(cross, (b - a).dot(c - b));
  }
  // 4 * area with area = cross / 2.
  return 2.0 * cross / (ab * bc * ca);
}

std::vector<double> curvature_profile(std::span<const Eigen::Vector3d> points, CurvatureKind kind) {
  std::vector<double> out(points.size(), 0.0);
  for (std::size_t l = 1; l + 1 < points.size(); ++l) out[l] = curvature(points, static_cast<int>(l), kind);
  return out;
}

KeyStepSet select_key_steps(const ProjectedTrajectory& proj, int k, CurvatureKind kind) {
  const int interior = static_cast<int>(proj.points.size()) - 2;
  if (k < 1) throw PreconditionError("select_key_steps: k must be >= 1");
  if (k > interior) throw PreconditionError("select_key_steps: k exceeds the number of interior steps");

  const auto profile = curvature_profile(proj.points, kind);
  std::vector<int> order(interior);
  std::iota(order.begin(), order.end(), 1);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return profile[a] > profile[b]; });

  KeyStepSet set;
  set.indices.assign(order.begin(), order.begin() + k);
  for (int i : set.indices) set.curvatures.push_back(profile[i]);
  return set;
}

}  // namespace rts
