#include "rsb/schedule.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "rsb/errors.hpp"

namespace rsb {
namespace {

void check_time(double t) {
  if (!(t >= 0.0 && t <= 1.0))
    throw std::domain_error("schedule time must lie in [0, 1], got " + std::to_string(t));
}

}  // namespace

void NoiseSchedule::validate() const {
  if (!(c > 0.0)) throw ConfigError("schedule.c must be positive");
  if (!(k > 1.0)) throw ConfigError("schedule.k must exceed 1");
  if (!(t_eps > 0.0 && t_eps < 1.0)) throw ConfigError("schedule.t_eps must lie in (0, 1)");
}

double diffusion_squared(const NoiseSchedule& schedule, double t) {
  return schedule.c * std::pow(schedule.k, 2.0 * t);
}

double sigma2(const NoiseSchedule& schedule, double t) {
  check_time(t);
  // expm1 keeps relative accuracy near t = 0.
  return schedule.c * std::expm1(2.0 * t * std::log(schedule.k)) / (2.0 * std::log(schedule.k));
}

BridgeCoefficients coefficients(const NoiseSchedule& schedule, double t) {
  check_time(t);
  BridgeCoefficients out;
  out.t = t;
  out.sigma2_t = sigma2(schedule, t);
  out.sigma2_1 = sigma2(schedule, 1.0);
  out.bar_sigma2_t = out.sigma2_1 - out.sigma2_t;
  out.w_x0 = out.bar_sigma2_t / out.sigma2_1;
  out.w_x1 = out.sigma2_t / out.sigma2_1;
  out.var_marginal = out.sigma2_t * out.bar_sigma2_t / out.sigma2_1;
  return out;
}

}  // namespace rsb
