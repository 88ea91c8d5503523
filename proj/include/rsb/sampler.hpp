#pragma once

#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "rsb/bridge.hpp"
#include "rsb/rng.hpp"
#include "rsb/schedule.hpp"

namespace rsb {

enum class SamplerKind { Sde, Ode };
enum class TimeGrid { Uniform };

struct SamplerConfig {
  int n_steps = 50;
  SamplerKind kind = SamplerKind::Sde;
  std::optional<double> t_min;  // defaults to schedule.t_eps
  TimeGrid grid = TimeGrid::Uniform;

  double resolved_t_min(const NoiseSchedule& schedule) const;
  void validate(const NoiseSchedule& schedule) const;
};

/// Times at which the network is called, descending from 1. With one step
/// the grid is {1}; otherwise n_steps points evenly spaced on [t_min, 1].
std::vector<double> time_grid(const SamplerConfig& config, const NoiseSchedule& schedule);

/// First-order SDE update from tau down to t given the data prediction x0_hat.
/// Throws std::invalid_argument when t >= tau or tau == 0.
Eigen::VectorXd sde_step(const Eigen::VectorXd& x_tau, double tau, double t,
                         const Eigen::VectorXd& x0_hat, const NoiseSchedule& schedule, Rng& rng);

/// Deterministic probability-flow update. Starting at tau = 1 (where the
/// bridge variance vanishes) it uses the limit w_x0(t) x0_hat + w_x1(t) x1.
Eigen::VectorXd ode_step(const Eigen::VectorXd& x_tau, double tau, double t,
                         const Eigen::VectorXd& x0_hat, const Eigen::VectorXd& x1,
                         const NoiseSchedule& schedule);

/// Column-batched forms of the two steps; columns are independent samples.
Eigen::MatrixXd sde_step_batch(const Eigen::MatrixXd& x_tau, double tau, double t,
                               const Eigen::MatrixXd& x0_hat, const NoiseSchedule& schedule,
                               Rng& rng);
Eigen::MatrixXd ode_step_batch(const Eigen::MatrixXd& x_tau, double tau, double t,
                               const Eigen::MatrixXd& x0_hat, const Eigen::MatrixXd& x1,
                               const NoiseSchedule& schedule);

using Predictor = std::function<Eigen::VectorXd(const Eigen::VectorXd& state, double t,
                                                const Eigen::VectorXd& condition)>;
using BatchPredictor = std::function<Eigen::MatrixXd(const Eigen::MatrixXd& states, double t,
                                                     const Eigen::MatrixXd& conditions)>;

struct Trajectory {
  std::vector<BridgeState> states;           // network inputs, t = 1 first
  std::vector<Eigen::VectorXd> predictions;  // network outputs, same order
  Eigen::VectorXd final;                     // == predictions.back()
};

struct BatchTrajectory {
  std::vector<double> times;
  std::vector<Eigen::MatrixXd> states;
  std::vector<Eigen::MatrixXd> predictions;
  Eigen::MatrixXd final;
};

/// Runs the reverse sampler from X_1 = init (if given) or y. The ODE form
/// uses the starting point as its x1 endpoint.
Trajectory sample_trajectory(const Predictor& predictor, const Eigen::VectorXd& y,
                             const Eigen::VectorXd& condition, const SamplerConfig& config,
                             const NoiseSchedule& schedule,
                             const std::optional<Eigen::VectorXd>& init, Rng& rng);

/// Batched sampler; `start` holds one X_1 per column. With `keep_states`
/// false only predictions are retained.
BatchTrajectory sample_batch(const BatchPredictor& predictor, const Eigen::MatrixXd& start,
                             const Eigen::MatrixXd& conditions, const SamplerConfig& config,
                             const NoiseSchedule& schedule, Rng& rng, bool keep_states = true);

}  // namespace rsb
