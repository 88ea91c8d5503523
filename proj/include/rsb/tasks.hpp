#pragma once

#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "rsb/bridge.hpp"
#include "rsb/rng.hpp"

namespace rsb {

/// x ~ N(mu0, Sigma0), y = A x + n with n ~ N(0, Sigma_n).
struct LinearGaussianTask {
  Eigen::VectorXd mu0 = Eigen::VectorXd::Zero(1);
  Eigen::MatrixXd Sigma0 = Eigen::MatrixXd::Identity(1, 1);
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(1, 1);
  Eigen::MatrixXd Sigma_n = Eigen::MatrixXd::Identity(1, 1);

  void validate() const;
};

/// Per coordinate: x ~ sum_i w_i N(c_i, s2), y = x + N(0, noise_var).
struct MixtureTask {
  std::vector<double> centers{-1.0, 1.0};
  std::vector<double> weights{0.5, 0.5};
  double s2 = 0.01;
  double noise_var = 0.25;
  int dim = 1;

  void validate() const;
};

using Task = std::variant<LinearGaussianTask, MixtureTask>;

void validate(const Task& task);
int data_dim(const Task& task);
int measurement_dim(const Task& task);
Eigen::VectorXd prior_mean(const Task& task);
/// Average per-coordinate prior variance, trace(Cov[x]) / d.
double prior_variance(const Task& task);

Eigen::VectorXd sample_clean(const Task& task, Rng& rng);
Eigen::VectorXd measure(const Task& task, const Eigen::VectorXd& x, Rng& rng);

/// E[x | y] in closed form.
Eigen::VectorXd posterior_mean(const Task& task, const Eigen::VectorXd& y);

/// Draws x, measures y, fills x_star with the analytic posterior mean.
TrainingPair sample_pair(const Task& task, Rng& rng);

/// n i.i.d. prior draws, one per column.
Eigen::MatrixXd clean_sampler(const Task& task, int n, Rng& rng);

}  // namespace rsb
