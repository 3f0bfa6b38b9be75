#include "rts/sim.hpp"

#include <cmath>
#include <limits>
#include <numeric>

namespace rts {

MixtureModel::MixtureModel(std::vector<double> weights, std::vector<Latent> means, std::vector<double> stddevs)
    : weights_(std::move(weights)), means_(std::move(means)), stddevs_(std::move(stddevs)) {
  if (weights_.empty()) throw PreconditionError("mixture: at least one component required");
  if (means_.size() != weights_.size() || stddevs_.size() != weights_.size()) {
    throw PreconditionError("mixture: weights, means and stddevs differ in length");
  }
  const double total = std::accumulate(weights_.begin(), weights_.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-12) throw PreconditionError("mixture: weights must sum to 1");
  for (std::size_t j = 0; j < weights_.size(); ++j) {
    if (!(weights_[j] > 0.0)) throw PreconditionError("mixture: weights must be positive");
    if (!(stddevs_[j] > 0.0) || !std::isfinite(stddevs_[j])) {
      throw PreconditionError("mixture: stddevs must be positive");
    }
    if (means_[j].dim() != means_.front().dim()) throw DimensionError("mixture: means differ in dimension");
  }
}

FlowPosterior flow_posterior(const MixtureModel& model, const Eigen::VectorXd& x, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw PreconditionError("flow time must lie in [0, 1]");
  if (x.size() != model.dim()) throw DimensionError("flow_posterior: dimension mismatch");
  const auto k = static_cast<Eigen::Index>(model.size());
  const double d = static_cast<double>(x.size());
  const double keep = 1.0 - t;

  Eigen::VectorXd log_r(k);
  std::vector<double> var(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const double sigma = model.stddevs()[j];
    var[j] = keep * keep * sigma * sigma + t * t;
    const double dist2 = (x - keep * model.means()[j].values()).squaredNorm();
    log_r[j] = std::log(model.weights()[j]) - 0.5 * d * std::log(var[j]) - 0.5 * dist2 / var[j];
  }
  const double top = log_r.maxCoeff();
  Eigen::VectorXd r = (log_r.array() - top).exp();
  r /= r.sum();

  FlowPosterior post{Eigen::VectorXd::Zero(x.size()), Eigen::VectorXd::Zero(x.size()), r};
  for (Eigen::Index j = 0; j < k; ++j) {
    const double sigma = model.stddevs()[j];
    const Eigen::VectorXd& mu = model.means()[j].values();
    const Eigen::VectorXd residual = x - keep * mu;
    post.clean += r[j] * (mu + (keep * sigma * sigma / var[j]) * residual);
    post.noise += r[j] * (t / var[j]) * residual;
  }
  return post;
}

Latent marginal_velocity(const MixtureModel& model, const Latent& x, double t, NfeCounter& nfe) {
  nfe.add();
  const auto post = flow_posterior(model, x.values(), t);
  return Latent(post.noise - post.clean);
}

Latent one_step_clean_estimate(const MixtureModel& model, const Latent& x, double t, NfeCounter& nfe) {
  nfe.add();
  return Latent(flow_posterior(model, x.values(), t).clean);
}

Latent lookahead_clean(const MixtureModel& model, const Latent& x, double t, int steps, NfeCounter& nfe) {
  if (steps < 1) throw PreconditionError("lookahead_clean: steps must be >= 1");
  Latent cur = x;
  double now = t;
  for (int s = 1; s < steps; ++s) {
    const double next = t * (1.0 - static_cast<double>(s) / steps);
    const Latent v = marginal_velocity(model, cur, now, nfe);
    cur = Latent(cur.values() + (next - now) * v.values());
    now = next;
  }
  return one_step_clean_estimate(model, cur, now, nfe);
}

SolverSpec SolverSpec::ode(int steps) {
  SolverSpec spec{SolverMode::kOde, steps, 0.0, {}};
  if (steps >= 1) {
    for (int i = 0; i <= steps; ++i) spec.time_grid.push_back(1.0 - static_cast<double>(i) / steps);
  }
  spec.validate();
  return spec;
}

SolverSpec SolverSpec::sde(int steps, double churn) {
  SolverSpec spec = ode(steps);
  spec.mode = SolverMode::kSde;
  spec.churn = churn;
  spec.validate();
  return spec;
}

double SolverSpec::noise_scale(int step) const {
  return churn * std::sqrt(time_grid[step] - time_grid[step + 1]);
}

void SolverSpec::validate() const {
  if (steps < 1) throw PreconditionError("solver: steps must be >= 1");
  if (time_grid.size() != static_cast<std::size_t>(steps) + 1) {
    throw PreconditionError("solver: time grid must have steps + 1 points");
  }
  if (time_grid.front() != 1.0 || time_grid.back() != 0.0) {
    throw PreconditionError("solver: time grid must run from 1 to 0");
  }
  for (std::size_t i = 1; i < time_grid.size(); ++i) {
    if (!(time_grid[i] < time_grid[i - 1])) throw PreconditionError("solver: time grid must strictly decrease");
  }
  if (mode == SolverMode::kOde && churn != 0.0) throw PreconditionError("solver: ODE mode requires churn = 0");
  if (mode == SolverMode::kSde && !(churn > 0.0 && std::isfinite(churn))) {
    throw PreconditionError("solver: SDE mode requires churn > 0");
  }
}

Latent heun_step(const MixtureModel& model, const Latent& x, double t, double t_next, NfeCounter& nfe) {
  const double dt = t_next - t;
  const Latent v1 = marginal_velocity(model, x, t, nfe);
  const Latent predicted(x.values() + dt * v1.values());
  const Latent v2 = marginal_velocity(model, predicted, t_next, nfe);
  return Latent(x.values() + (0.5 * dt) * (v1.values() + v2.values()));
}

std::vector<Latent> draw_path_noise(const SolverSpec& spec, Eigen::Index d, const RngStream& stream) {
  std::vector<Latent> out;
  out.reserve(spec.injected_count());
  for (int i = 0; i < spec.injected_count(); ++i) out.push_back(sample_gaussian(stream.derive(i), d));
  return out;
}

NoiseTrajectory denoise(const MixtureModel& model, const SolverSpec& spec, const Latent& z_init,
                        std::optional<std::span<const Latent>> injected, const RngStream& stream, NfeCounter& nfe) {
  spec.validate();
  if (z_init.dim() != model.dim()) throw DimensionError("denoise: initial noise dimension mismatch");
  const int noises = spec.injected_count();
  if (injected) {
    if (static_cast<int>(injected->size()) != noises) {
      throw PreconditionError("denoise: injected noise count must equal steps - 1 in SDE mode, 0 in ODE mode");
    }
    for (const auto& z : *injected) {
      if (z.dim() != model.dim()) throw DimensionError("denoise: injected noise dimension mismatch");
    }
  }

  NoiseTrajectory traj;
  traj.latents.reserve(spec.steps + 1);
  traj.latents.push_back(z_init);
  traj.step_times = spec.time_grid;
  traj.injected.reserve(noises);
  for (int i = 0; i < spec.steps; ++i) {
    Latent next = heun_step(model, traj.latents.back(), spec.time_grid[i], spec.time_grid[i + 1], nfe);
    if (i < noises) {
      Latent z = injected ? (*injected)[i] : sample_gaussian(stream.derive(i), model.dim());
      next = Latent(next.values() + spec.noise_scale(i) * z.values());
      traj.injected.push_back(std::move(z));
    }
    traj.latents.push_back(std::move(next));
  }
  return traj;
}

ModePreferenceReward mode_preference(const MixtureModel& model, int preferred, double sharpness, double off_weight) {
  return ModePreferenceReward{model.means(), preferred, sharpness, off_weight};
}

RewardScore evaluate_reward(const RewardModel& reward, const Latent& x) {
  struct Visitor {
    const Latent& x;
    double operator()(const QuadraticReward& q) const {
      if (q.target.dim() != x.dim()) throw DimensionError("quadratic reward: dimension mismatch");
      return -(x.values() - q.target.values()).squaredNorm();
    }
    double operator()(const ModePreferenceReward& m) const {
      if (m.preferred < 0 || static_cast<std::size_t>(m.preferred) >= m.means.size()) {
        throw PreconditionError("mode preference: preferred index out of range");
      }
      if (!(m.sharpness > 0.0)) throw PreconditionError("mode preference: sharpness must be positive");
      double total = 0.0;
      for (std::size_t j = 0; j < m.means.size(); ++j) {
        if (m.means[j].dim() != x.dim()) throw DimensionError("mode preference: dimension mismatch");
        const double w = static_cast<int>(j) == m.preferred ? 1.0 : m.off_weight;
        const double d2 = (x.values() - m.means[j].values()).squaredNorm();
        total += w * std::exp(-d2 / (2.0 * m.sharpness * m.sharpness));
      }
      return total;
    }
    double operator()(const CustomReward& c) const { return c.fn(x); }
  };
  const double v = std::visit(Visitor{x}, reward);
  if (!std::isfinite(v)) throw NonFiniteError("reward model returned a non-finite value");
  return RewardScore(v);
}

int nearest_component(const MixtureModel& model, const Latent& x) {
  int best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < model.size(); ++j) {
    const double d2 = (x.values() - model.means()[j].values()).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best = static_cast<int>(j);
    }
  }
  return best;
}

}  // namespace rts
