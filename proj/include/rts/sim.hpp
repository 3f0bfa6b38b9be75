#pragma once

#include <functional>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "rts/core.hpp"
#include "rts/rng.hpp"

namespace rts {

// Isotropic Gaussian mixture standing in for a trained generator. Samples
// follow the linear flow-matching path x_t = (1 - t) x0 + t eps.
class MixtureModel {
 public:
  MixtureModel(std::vector<double> weights, std::vector<Latent> means, std::vector<double> stddevs);

  Eigen::Index dim() const { return means_.front().dim(); }
  std::size_t size() const { return weights_.size(); }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<Latent>& means() const { return means_; }
  const std::vector<double>& stddevs() const { return stddevs_; }

 private:
  std::vector<double> weights_;
  std::vector<Latent> means_;
  std::vector<double> stddevs_;
};

// Posterior quantities of the interpolation path at (x, t).
struct FlowPosterior {
  Eigen::VectorXd clean;           // E[x0 | x_t = x]
  Eigen::VectorXd noise;           // E[eps | x_t = x]
  Eigen::VectorXd responsibilities;
};

// Does not touch the NFE counter.
FlowPosterior flow_posterior(const MixtureModel& model, const Eigen::VectorXd& x, double t);

// E[eps - x0 | x_t = x]. One NFE.
Latent marginal_velocity(const MixtureModel& model, const Latent& x, double t, NfeCounter& nfe);

// E[x0 | x_t = x]. One NFE.
Latent one_step_clean_estimate(const MixtureModel& model, const Latent& x, double t, NfeCounter& nfe);

// `steps` Euler jumps on a uniform grid from t to 0. The final jump lands on
// the clean estimate, so steps == 1 is one_step_clean_estimate. `steps` NFEs.
Latent lookahead_clean(const MixtureModel& model, const Latent& x, double t, int steps, NfeCounter& nfe);

enum class SolverMode { kOde, kSde };

struct SolverSpec {
  SolverMode mode = SolverMode::kOde;
  int steps = 50;
  double churn = 0.0;
  std::vector<double> time_grid;  // steps + 1 points from 1 down to 0

  static SolverSpec ode(int steps);
  static SolverSpec sde(int steps, double churn);

  // Number of injected noises: steps - 1 in SDE mode, 0 in ODE mode.
  int injected_count() const { return mode == SolverMode::kSde ? steps - 1 : 0; }
  // Scale applied to an injected noise after step i: churn * sqrt(dt_i).
  double noise_scale(int step) const;
  void validate() const;
};

struct NoiseTrajectory {
  std::vector<Latent> latents;   // steps + 1 states, latents[0] = initial noise
  std::vector<Latent> injected;  // injected[i] is added when producing latents[i + 1]
  std::vector<double> step_times;

  const Latent& final_sample() const { return latents.back(); }
};

// One Heun step from t to t_next (no noise). Two NFEs.
Latent heun_step(const MixtureModel& model, const Latent& x, double t, double t_next, NfeCounter& nfe);

// Integrates from t = 1 to 0. In SDE mode step i < steps - 1 is followed by
// x += noise_scale(i) * z_i with z_i from `injected` when given, else drawn
// from stream.derive(i). 2 * steps NFEs.
NoiseTrajectory denoise(const MixtureModel& model, const SolverSpec& spec, const Latent& z_init,
                        std::optional<std::span<const Latent>> injected, const RngStream& stream, NfeCounter& nfe);

// Draws the steps - 1 path noises denoise would draw from `stream`.
std::vector<Latent> draw_path_noise(const SolverSpec& spec, Eigen::Index d, const RngStream& stream);

struct QuadraticReward {
  Latent target;
};

// sum_j w_j exp(-|x - mu_j|^2 / (2 sharpness^2)), w = 1 for the preferred
// component and `off_weight` for the rest.
struct ModePreferenceReward {
  std::vector<Latent> means;
  int preferred = 0;
  double sharpness = 1.0;
  double off_weight = 0.5;
};

struct CustomReward {
  std::function<double(const Latent&)> fn;
};

using RewardModel = std::variant<QuadraticReward, ModePreferenceReward, CustomReward>;

ModePreferenceReward mode_preference(const MixtureModel& model, int preferred, double sharpness,
                                     double off_weight = 0.5);

RewardScore evaluate_reward(const RewardModel& reward, const Latent& x);

// Index of the mixture mean closest to x.
int nearest_component(const MixtureModel& model, const Latent& x);

}  // namespace rts
