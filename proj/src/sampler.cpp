#include "rsb/sampler.hpp"

#include <cmath>
#include <stdexcept>

#include "rsb/errors.hpp"

namespace rsb {
namespace {

void check_order(double tau, double t) {
  if (!(t < tau)) throw std::invalid_argument("sampler step requires t < tau");
  if (tau <= 0.0) throw std::invalid_argument("sampler step requires tau > 0");
  if (t < 0.0 || tau > 1.0) throw std::domain_error("sampler times must lie in [0, 1]");
}

void check_same_shape(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionError(std::string("shape mismatch: ") + what);
}

}  // namespace

double SamplerConfig::resolved_t_min(const NoiseSchedule& schedule) const {
  return t_min.value_or(schedule.t_eps);
}

void SamplerConfig::validate(const NoiseSchedule& schedule) const {
  if (n_steps < 1) throw ConfigError("sampler.n_steps must be at least 1");
  double tm = resolved_t_min(schedule);
  if (!(tm > 0.0 && tm < 1.0)) throw ConfigError("sampler.t_min must lie in (0, 1)");
}

std::vector<double> time_grid(const SamplerConfig& config, const NoiseSchedule& schedule) {
  config.validate(schedule);
  std::vector<double> times(static_cast<std::size_t>(config.n_steps));
  if (config.n_steps == 1) {
    times[0] = 1.0;
    return times;
  }
  double t_min = config.resolved_t_min(schedule);
  double h = (1.0 - t_min) / (config.n_steps - 1);
  for (int i = 0; i < config.n_steps; ++i) times[i] = 1.0 - i * h;
  times.back() = t_min;
  return times;
}

Eigen::MatrixXd sde_step_batch(const Eigen::MatrixXd& x_tau, double tau, double t,
                               const Eigen::MatrixXd& x0_hat, const NoiseSchedule& schedule,
                               Rng& rng) {
  check_order(tau, t);
  check_same_shape(x_tau, x0_hat, "x_tau vs x0_hat");
  double s2_tau = sigma2(schedule, tau);
  double s2_t = sigma2(schedule, t);
  double w_tau = s2_t / s2_tau;
  Eigen::MatrixXd z = rng.normal_matrix(x_tau.rows(), x_tau.cols());
  double noise = std::sqrt(s2_t) * std::sqrt(std::max(0.0, 1.0 - w_tau));
  return w_tau * x_tau + (1.0 - w_tau) * x0_hat + noise * z;
}

Eigen::MatrixXd ode_step_batch(const Eigen::MatrixXd& x_tau, double tau, double t,
                               const Eigen::MatrixXd& x0_hat, const Eigen::MatrixXd& x1,
                               const NoiseSchedule& schedule) {
  check_order(tau, t);
  check_same_shape(x_tau, x0_hat, "x_tau vs x0_hat");
  check_same_shape(x_tau, x1, "x_tau vs x1");
  BridgeCoefficients at_tau = coefficients(schedule, tau);
  BridgeCoefficients at_t = coefficients(schedule, t);
  if (at_tau.bar_sigma2_t <= 0.0) return at_t.w_x0 * x0_hat + at_t.w_x1 * x1;

  double s_tau = std::sqrt(at_tau.sigma2_t);
  double sb_tau = std::sqrt(at_tau.bar_sigma2_t);
  double s_t = std::sqrt(at_t.sigma2_t);
  double sb_t = std::sqrt(at_t.bar_sigma2_t);
  double s2_1 = at_t.sigma2_1;

  double c_state = (s_t * sb_t) / (s_tau * sb_tau);
  double c_x0 = (at_t.bar_sigma2_t - sb_tau * sb_t * s_t / s_tau) / s2_1;
  double c_x1 = (at_t.sigma2_t - s_tau * s_t * sb_t / sb_tau) / s2_1;
  return c_state * x_tau + c_x0 * x0_hat + c_x1 * x1;
}

Eigen::VectorXd sde_step(const Eigen::VectorXd& x_tau, double tau, double t,
                         const Eigen::VectorXd& x0_hat, const NoiseSchedule& schedule, Rng& rng) {
  return sde_step_batch(x_tau, tau, t, x0_hat, schedule, rng);
}

Eigen::VectorXd ode_step(const Eigen::VectorXd& x_tau, double tau, double t,
                         const Eigen::VectorXd& x0_hat, const Eigen::VectorXd& x1,
                         const NoiseSchedule& schedule) {
  return ode_step_batch(x_tau, tau, t, x0_hat, x1, schedule);
}

BatchTrajectory sample_batch(const BatchPredictor& predictor, const Eigen::MatrixXd& start,
                             const Eigen::MatrixXd& conditions, const SamplerConfig& config,
                             const NoiseSchedule& schedule, Rng& rng, bool keep_states) {
  if (start.cols() != conditions.cols())
    throw DimensionError("sampler start and conditions differ in batch size");
  BatchTrajectory out;
  out.times = time_grid(config, schedule);
  Eigen::MatrixXd state = start;
  const std::size_t n = out.times.size();
  for (std::size_t i = 0; i < n; ++i) {
    double tau = out.times[i];
    Eigen::MatrixXd pred = predictor(state, tau, conditions);
    check_same_shape(pred, state, "predictor output vs state");
    if (i + 1 < n) {
      double t = out.times[i + 1];
      Eigen::MatrixXd next = config.kind == SamplerKind::Sde
                                 ? sde_step_batch(state, tau, t, pred, schedule, rng)
                                 : ode_step_batch(state, tau, t, pred, start, schedule);
      if (keep_states) out.states.push_back(std::move(state));
      state = std::move(next);
    } else if (keep_states) {
      out.states.push_back(state);
    }
    if (i + 1 == n) out.final = pred;
    out.predictions.push_back(std::move(pred));
  }
  return out;
}

Trajectory sample_trajectory(const Predictor& predictor, const Eigen::VectorXd& y,
                             const Eigen::VectorXd& condition, const SamplerConfig& config,
                             const NoiseSchedule& schedule,
                             const std::optional<Eigen::VectorXd>& init, Rng& rng) {
  if (init && init->size() != y.size()) throw DimensionError("init and y differ in dimension");
  BatchPredictor batched = [&](const Eigen::MatrixXd& s, double t, const Eigen::MatrixXd& c) {
    Eigen::VectorXd out = predictor(s.col(0), t, c.col(0));
    if (out.size() != s.rows()) throw DimensionError("predictor output dimension mismatch");
    return Eigen::MatrixXd(out);
  };
  Eigen::MatrixXd start = init ? *init : y;
  BatchTrajectory bt = sample_batch(batched, start, Eigen::MatrixXd(condition), config, schedule, rng);
  Trajectory out;
  for (std::size_t i = 0; i < bt.times.size(); ++i) {
    out.states.push_back({bt.states[i].col(0), bt.times[i]});
    out.predictions.push_back(bt.predictions[i].col(0));
  }
  out.final = bt.final.col(0);
  return out;
}

}  // namespace rsb
