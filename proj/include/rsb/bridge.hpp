#pragma once

#include <Eigen/Dense>

#include "rsb/rng.hpp"
#include "rsb/schedule.hpp"

namespace rsb {

struct BridgeState {
  Eigen::VectorXd x_t;
  double t = 1.0;
};

/// Clean vector x, measurement y and posterior-mean estimate x_star.
struct TrainingPair {
  Eigen::VectorXd x;
  Eigen::VectorXd y;
  Eigen::VectorXd x_star;

  /// Throws DimensionError on mismatched sizes, std::invalid_argument on a
  /// non-finite x_star.
  void validate() const;
};

/// Monotone interpolation weight with w(0) = 0 and w(1) = 1. The default
/// is t^2; exponent 1 gives the identity map.
struct PerturbationWeight {
  double exponent = 2.0;

  double operator()(double t) const;
};

/// t^2.
double perturbation_weight(double t);

/// Draw from the Gaussian bridge marginal between x0 (t = 0) and x1 (t = 1).
Eigen::VectorXd sample_marginal(const BridgeCoefficients& coeffs, const Eigen::VectorXd& x0,
                                const Eigen::VectorXd& x1, Rng& rng);

/// Mean of the bridge marginal, without noise.
Eigen::VectorXd marginal_mean(const BridgeCoefficients& coeffs, const Eigen::VectorXd& x0,
                              const Eigen::VectorXd& x1);

/// x + w(t) (x_star - x). Written as an increment so that x_star == x gives
/// back x bit-for-bit; w = 1 returns x_star itself.
Eigen::VectorXd perturbed_target(const TrainingPair& pair, double t,
                                 const PerturbationWeight& weight = {});

/// Bridge marginal at t with X_0 replaced by the perturbed target and X_1 = y.
BridgeState perturbed_state(const TrainingPair& pair, double t, const BridgeCoefficients& coeffs,
                            Rng& rng, const PerturbationWeight& weight = {});

}  // namespace rsb
