#pragma once

namespace rsb {

/// Variance-exploding schedule: zero drift, g^2(t) = c * k^(2t).
struct NoiseSchedule {
  double c = 0.40;
  double k = 2.6;
  double t_eps = 1e-4;

  /// Throws ConfigError on c <= 0, k <= 1 or t_eps outside (0, 1).
  void validate() const;
};

/// Closed-form bridge quantities at time t. All `sigma2*` members are
/// squared standard deviations.
struct BridgeCoefficients {
  double t = 0.0;
  double alpha_t = 1.0;
  double bar_alpha_t = 1.0;
  double sigma2_t = 0.0;
  double bar_sigma2_t = 0.0;  // sigma2_1 - sigma2_t
  double sigma2_1 = 0.0;
  double w_x0 = 1.0;  // marginal mean weight on X_0
  double w_x1 = 0.0;  // marginal mean weight on X_1
  double var_marginal = 0.0;
};

/// c (k^(2t) - 1) / (2 ln k), the integral of g^2 over [0, t].
/// Throws std::domain_error for t outside [0, 1].
double sigma2(const NoiseSchedule& schedule, double t);

/// Throws std::domain_error for t outside [0, 1].
BridgeCoefficients coefficients(const NoiseSchedule& schedule, double t);

/// g^2(t) = c k^(2t).
double diffusion_squared(const NoiseSchedule& schedule, double t);

}  // namespace rsb
