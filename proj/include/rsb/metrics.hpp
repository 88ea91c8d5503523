#pragma once

#include <vector>

#include <Eigen/Dense>

#include "rsb/sampler.hpp"

namespace rsb {

inline constexpr double kSiSdrCeilingDb = 60.0;

/// Scale-invariant SDR in dB, capped at `ceiling_db`. A perfect estimate
/// returns the ceiling; an estimate orthogonal to the reference returns
/// -infinity. Throws std::invalid_argument for a zero reference.
double si_sdr(const Eigen::VectorXd& estimate, const Eigen::VectorXd& reference,
              double ceiling_db = kSiSdrCeilingDb);

struct PerceptionDistance {
  double w2 = 0.0;               // Gaussian-moment 2-Wasserstein
  double energy_distance = 0.0;  // V-statistic
  bool regularized = false;      // a covariance needed the 1e-9 diagonal
};

/// Sample sets hold one sample per column.
PerceptionDistance perception_distance(const Eigen::MatrixXd& outputs,
                                       const Eigen::MatrixXd& reference);

/// Closed-form W2 between N(m1, c1) and N(m2, c2).
double gaussian_w2(const Eigen::VectorXd& m1, const Eigen::MatrixXd& c1, const Eigen::VectorXd& m2,
                   const Eigen::MatrixXd& c2);

/// Gaussian-moment W2 only; skips the quadratic-cost energy statistic.
double moment_w2(const Eigen::MatrixXd& outputs, const Eigen::MatrixXd& reference);

double energy_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// Mean squared coordinate error.
double mse(const Eigen::MatrixXd& estimate, const Eigen::MatrixXd& reference);

/// ||prediction_i - x_true||^2 for each recorded prediction.
std::vector<double> per_step_errors(const Trajectory& trajectory, const Eigen::VectorXd& x_true);

/// Same, averaged over the batch columns.
std::vector<double> per_step_errors(const BatchTrajectory& trajectory, const Eigen::MatrixXd& x_true);

struct EvalReport {
  double mse = 0.0;
  double si_sdr_db = 0.0;  // whole evaluation set treated as one signal
  double w2 = 0.0;
  double energy_distance = 0.0;
  bool covariance_regularized = false;
  std::vector<double> per_step_error;
};

EvalReport evaluate(const BatchTrajectory& trajectory, const Eigen::MatrixXd& x_true,
                    const Eigen::MatrixXd& clean_reference);

}  // namespace rsb
