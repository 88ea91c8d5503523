#include "rsb/bridge.hpp"

#include <cmath>
#include <stdexcept>

#include "rsb/errors.hpp"

namespace rsb {

void TrainingPair::validate() const {
  if (x.size() != y.size() || x.size() != x_star.size())
    throw DimensionError("training pair vectors must share one dimension");
  if (!x_star.allFinite()) throw std::invalid_argument("x_star has non-finite entries");
}

double PerturbationWeight::operator()(double t) const {
  if (exponent == 2.0) return t * t;
  if (exponent == 1.0) return t;
  return std::pow(t, exponent);
}

double perturbation_weight(double t) { return t * t; }

Eigen::VectorXd marginal_mean(const BridgeCoefficients& coeffs, const Eigen::VectorXd& x0,
                              const Eigen::VectorXd& x1) {
  if (x0.size() != x1.size()) throw DimensionError("bridge endpoints differ in dimension");
  return coeffs.w_x0 * x0 + coeffs.w_x1 * x1;
}

Eigen::VectorXd sample_marginal(const BridgeCoefficients& coeffs, const Eigen::VectorXd& x0,
                                const Eigen::VectorXd& x1, Rng& rng) {
  Eigen::VectorXd mean = marginal_mean(coeffs, x0, x1);
  // Always consume the draws so that stream positions do not depend on t.
  Eigen::VectorXd z = rng.normal_vector(mean.size());
  if (coeffs.var_marginal > 0.0) mean += std::sqrt(coeffs.var_marginal) * z;
  return mean;
}

Eigen::VectorXd perturbed_target(const TrainingPair& pair, double t,
                                 const PerturbationWeight& weight) {
  pair.validate();
  const double w = weight(t);
  if (w == 1.0) return pair.x_star;
  return pair.x + w * (pair.x_star - pair.x);
}

BridgeState perturbed_state(const TrainingPair& pair, double t, const BridgeCoefficients& coeffs,
                            Rng& rng, const PerturbationWeight& weight) {
  if (coeffs.t != t) throw std::invalid_argument("coefficients were computed for a different time");
  return {sample_marginal(coeffs, perturbed_target(pair, t, weight), pair.y, rng), t};
}

}  // namespace rsb
