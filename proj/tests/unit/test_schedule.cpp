#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "../support/oracles.hpp"
#include "rsb/bridge.hpp"
#include "rsb/errors.hpp"
#include "rsb/rng.hpp"
#include "rsb/sampler.hpp"
#include "rsb/schedule.hpp"

using namespace rsb;

namespace {
double quadrature_sigma2(const NoiseSchedule& s, double t) {
  return oracle::simpson([&](double tau) { return s.c * std::pow(s.k, 2.0 * tau); }, 0.0, t, 2000);
}
}  // namespace

TEST_CASE("sigma2 at the endpoints and midpoint") {
  NoiseSchedule s;
  CHECK(sigma2(s, 0.0) == 0.0);
  CHECK(std::abs(sigma2(s, 1.0) - 1.20564) < 1e-5);
  CHECK(std::abs(sigma2(s, 0.5) - 0.33490) < 1e-5);
  CHECK(std::abs(quadrature_sigma2(s, 1.0) - 1.20564) < 1e-5);
  CHECK(std::abs(quadrature_sigma2(s, 0.5) - 0.33490) < 1e-5);
}

TEST_CASE("closed form agrees with quadrature of g^2") {
  for (NoiseSchedule s : {NoiseSchedule{}, NoiseSchedule{1.0, 1.5, 1e-3}, NoiseSchedule{0.1, 4.0, 1e-4}}) {
    for (int i = 1; i <= 100; ++i) {
      const double t = i / 100.0;
      const double q = quadrature_sigma2(s, t);
      CHECK(std::abs(sigma2(s, t) - q) / q < 1e-6);
    }
  }
}

TEST_CASE("diffusion squared is the derivative of sigma2") {
  NoiseSchedule s;
  for (double t : {0.1, 0.5, 0.9}) {
    const double h = 1e-6;
    const double fd = (sigma2(s, t + h) - sigma2(s, t - h)) / (2 * h);
    CHECK(fd == doctest::Approx(diffusion_squared(s, t)).epsilon(1e-7));
  }
}

TEST_CASE("coefficients at t = 1 and t = 0.5") {
  NoiseSchedule s;
  BridgeCoefficients one = coefficients(s, 1.0);
  CHECK(one.w_x0 == 0.0);
  CHECK(one.w_x1 == 1.0);
  CHECK(one.var_marginal == 0.0);

  BridgeCoefficients half = coefficients(s, 0.5);
  const double k2 = s.k * s.k;
  CHECK(half.w_x0 == doctest::Approx((k2 - s.k) / (k2 - 1.0)).epsilon(1e-13));
  CHECK(half.w_x1 == doctest::Approx(1.0 - (k2 - s.k) / (k2 - 1.0)).epsilon(1e-13));
  CHECK(std::abs(half.w_x0 - 0.72222) < 1e-5);
  CHECK(std::abs(half.w_x1 - 0.27778) < 1e-5);
  CHECK(std::abs(half.var_marginal - 0.24187) < 1e-4);
  CHECK(std::abs(half.sigma2_t + half.bar_sigma2_t - half.sigma2_1) < 1e-15);

  const double q = quadrature_sigma2(s, 0.5), q1 = quadrature_sigma2(s, 1.0);
  CHECK(half.w_x1 == doctest::Approx(q / q1).epsilon(1e-9));
}

TEST_CASE("marginal variance matches a two-step sampler composition") {
  // x0 = 0, x1 = 0: start at the exact t = 1 marginal (a point), take one
  // oracle SDE step to 0.75 and another to 0.5.
  NoiseSchedule s;
  Rng rng(11);
  const int n = 100000;
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(1, n), zero = Eigen::MatrixXd::Zero(1, n);
  x = sde_step_batch(x, 1.0, 0.75, zero, s, rng);
  x = sde_step_batch(x, 0.75, 0.5, zero, s, rng);
  const double mean = x.mean();
  const double var = (x.array() - mean).square().sum() / (n - 1);
  CHECK(std::abs(var - 0.24187) / 0.24187 < 0.02);
}

TEST_CASE("schedule rejects invalid input") {
  NoiseSchedule s;
  CHECK_THROWS_AS(sigma2(s, 1.5), std::domain_error);
  CHECK_THROWS_AS(coefficients(s, -0.1), std::domain_error);
  CHECK_THROWS_AS((NoiseSchedule{0.4, 1.0, 1e-4}.validate()), ConfigError);
  CHECK_THROWS_AS((NoiseSchedule{-1.0, 2.6, 1e-4}.validate()), ConfigError);
  CHECK_THROWS_AS((NoiseSchedule{0.4, 2.6, 0.0}.validate()), ConfigError);
}
