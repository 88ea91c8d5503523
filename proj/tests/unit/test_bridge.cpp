#include <doctest.h>

#include "rsb/bridge.hpp"
#include "rsb/errors.hpp"
#include "rsb/rng.hpp"
#include "rsb/schedule.hpp"

using namespace rsb;

namespace {
Eigen::VectorXd scalar(double v) { return Eigen::VectorXd::Constant(1, v); }

struct Moments {
  double mean = 0.0, var = 0.0;
};

template <class Draw>
Moments moments(int n, Draw draw) {
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = draw();
    s += v;
    s2 += v * v;
  }
  const double mean = s / n;
  return {mean, (s2 - n * mean * mean) / (n - 1)};
}
}  // namespace

TEST_CASE("marginal boundaries") {
  NoiseSchedule s;
  Rng rng(3);
  Eigen::VectorXd x0(3), x1(3);
  x0 << 1.0, -2.0, 0.5;
  x1 << 0.3, 0.1, -4.0;
  CHECK(sample_marginal(coefficients(s, 1.0), x0, x1, rng) == x1);
  CHECK(sample_marginal(coefficients(s, 0.0), x0, x1, rng) == x0);
}

TEST_CASE("marginal moments at t = 0.5") {
  NoiseSchedule s;
  BridgeCoefficients c = coefficients(s, 0.5);
  Rng rng(5);
  Moments m = moments(100000, [&] { return sample_marginal(c, scalar(0.0), scalar(1.0), rng)(0); });
  CHECK(std::abs(m.mean - 0.27778) < 0.005);
  CHECK(std::abs(m.var - 0.24187) / 0.24187 < 0.02);
  CHECK(marginal_mean(c, scalar(0.0), scalar(1.0))(0) == doctest::Approx(c.w_x1));
}

TEST_CASE("perturbation weight") {
  CHECK(perturbation_weight(0.0) == 0.0);
  CHECK(perturbation_weight(1.0) == 1.0);
  CHECK(perturbation_weight(0.5) == 0.25);
  CHECK(PerturbationWeight{1.0}(0.3) == doctest::Approx(0.3));
}

TEST_CASE("perturbed target") {
  TrainingPair p{scalar(0.0), scalar(1.0), scalar(2.0)};
  CHECK(perturbed_target(p, 0.0)(0) == 0.0);
  CHECK(perturbed_target(p, 1.0)(0) == 2.0);
  CHECK(perturbed_target(p, 0.5)(0) == doctest::Approx(0.5));

  TrainingPair q{scalar(0.37), scalar(1.0), scalar(-1.91)};
  CHECK(perturbed_target(q, 1.0)(0) == -1.91);
  q.x_star = q.x;
  CHECK(perturbed_target(q, 0.61)(0) == 0.37);
}

TEST_CASE("perturbed state") {
  NoiseSchedule s;
  TrainingPair p{scalar(0.0), scalar(1.0), scalar(2.0)};
  Rng rng(9);
  BridgeState at_one = perturbed_state(p, 1.0, coefficients(s, 1.0), rng);
  CHECK(at_one.x_t(0) == 1.0);
  CHECK(at_one.t == 1.0);

  BridgeCoefficients c = coefficients(s, 0.5);
  Moments m = moments(100000, [&] { return perturbed_state(p, 0.5, c, rng).x_t(0); });
  CHECK(std::abs(m.mean - (0.72222 * 0.5 + 0.27778 * 1.0)) < 0.005);
  CHECK(std::abs(m.var - 0.24187) / 0.24187 < 0.02);

  CHECK_THROWS(perturbed_state(p, 0.4, c, rng));
}

TEST_CASE("zero simulated error reduces the perturbed state to the exact marginal") {
  NoiseSchedule s;
  BridgeCoefficients c = coefficients(s, 0.42);
  TrainingPair p{scalar(0.8), scalar(-0.3), scalar(0.8)};
  Rng a(21), b(21);
  for (int i = 0; i < 100; ++i)
    CHECK(perturbed_state(p, 0.42, c, a).x_t == sample_marginal(c, p.x, p.y, b));
}

TEST_CASE("pair validation") {
  TrainingPair bad{Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(3)};
  CHECK_THROWS_AS(bad.validate(), DimensionError);
  TrainingPair nan{scalar(0.0), scalar(0.0), scalar(std::nan(""))};
  CHECK_THROWS_AS(nan.validate(), std::invalid_argument);
}
