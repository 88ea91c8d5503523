#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "../support/oracles.hpp"
#include "rsb/metrics.hpp"
#include "rsb/rng.hpp"
#include "rsb/tasks.hpp"

using namespace rsb;

TEST_CASE("si-sdr examples") {
  Eigen::VectorXd ref(4);
  ref << 1.0, -2.0, 0.5, 3.0;
  CHECK(si_sdr(ref, ref) == kSiSdrCeilingDb);
  CHECK(si_sdr(2.0 * ref, ref) == si_sdr(ref, ref));
  CHECK(si_sdr(ref, ref, 30.0) == 30.0);
  CHECK(si_sdr(Eigen::Vector2d(1.0, 1.0), Eigen::Vector2d(1.0, 0.0)) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(si_sdr(Eigen::Vector2d(0.0, 1.0), Eigen::Vector2d(1.0, 0.0)) ==
        -std::numeric_limits<double>::infinity());
  CHECK_THROWS_AS(si_sdr(ref, Eigen::VectorXd::Zero(4)), std::invalid_argument);
  CHECK_THROWS(si_sdr(Eigen::VectorXd::Zero(3), ref));
}

TEST_CASE("si-sdr is scale invariant and falls with added noise") {
  Rng rng(3);
  Eigen::VectorXd ref = rng.normal_vector(1000);
  Eigen::VectorXd noise = rng.normal_vector(1000);
  Eigen::VectorXd est = ref + 0.05 * noise;
  CHECK(si_sdr(3.7 * est, ref) == doctest::Approx(si_sdr(est, ref)));
  double prev = si_sdr(est, ref);
  for (double level : {0.1, 0.3, 1.0}) {
    double v = si_sdr(ref + level * noise, ref);
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("perception distance") {
  Rng rng(8);
  Eigen::MatrixXd a = rng.normal_matrix(1, 10000);
  PerceptionDistance same = perception_distance(a, a);
  CHECK(same.w2 < 1e-3);
  CHECK(same.energy_distance < 1e-3);

  Eigen::MatrixXd b = (rng.normal_matrix(1, 10000).array() + 1.0).matrix();
  PerceptionDistance shifted = perception_distance(a, b);
  CHECK(std::abs(shifted.w2 - 1.0) < 0.02);
  PerceptionDistance swapped = perception_distance(b, a);
  CHECK(swapped.w2 == doctest::Approx(shifted.w2).epsilon(1e-6));
  CHECK(swapped.energy_distance == doctest::Approx(shifted.energy_distance).epsilon(1e-9));
  CHECK(!shifted.regularized);

  Eigen::MatrixXd flat = Eigen::MatrixXd::Ones(2, 50);
  PerceptionDistance degenerate = perception_distance(flat, rng.normal_matrix(2, 50));
  CHECK(degenerate.regularized);
  CHECK(std::isfinite(degenerate.w2));
}

TEST_CASE("gaussian w2 closed form") {
  Eigen::VectorXd m1 = Eigen::VectorXd::Zero(2), m2 = Eigen::Vector2d(3.0, 4.0);
  Eigen::MatrixXd i2 = Eigen::MatrixXd::Identity(2, 2);
  CHECK(gaussian_w2(m1, i2, m2, i2) == doctest::Approx(5.0));
  // Scalar: W2^2 = (m1 - m2)^2 + (s1 - s2)^2
  Eigen::MatrixXd c1 = Eigen::MatrixXd::Constant(1, 1, 4.0), c2 = Eigen::MatrixXd::Constant(1, 1, 1.0);
  CHECK(gaussian_w2(Eigen::VectorXd::Zero(1), c1, Eigen::VectorXd::Ones(1), c2) ==
        doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("posterior-mean outputs are farther from the clean law than posterior samples") {
  MixtureTask m;
  Task task = m;
  Rng rng(10);
  std::mt19937_64 gen(10);
  const int n = 3000;
  Eigen::MatrixXd means(1, n), samples(1, n);
  for (int j = 0; j < n; ++j) {
    TrainingPair p = sample_pair(task, rng);
    means(0, j) = p.x_star(0);
    samples(0, j) = oracle::mixture_posterior_sample(m, p.y(0), gen);
  }
  Eigen::MatrixXd clean = clean_sampler(task, n, rng);
  CHECK(energy_distance(means, clean) > energy_distance(samples, clean));
}

TEST_CASE("per-step errors") {
  Eigen::MatrixXd x(1, 3), x_star(1, 3);
  x << 1.0, -1.0, 0.5;
  x_star << 0.8, -0.2, 0.5;
  BatchTrajectory oracle_run, star_run;
  for (int i = 0; i < 5; ++i) {
    oracle_run.times.push_back(1.0 - i * 0.2);
    oracle_run.predictions.push_back(x);
    star_run.times.push_back(1.0 - i * 0.2);
    star_run.predictions.push_back(x_star);
  }
  for (double e : per_step_errors(oracle_run, x)) CHECK(e == 0.0);
  const double expected = (x_star - x).squaredNorm() / 3.0;
  auto errs = per_step_errors(star_run, x);
  CHECK(errs.size() == 5);
  for (double e : errs) CHECK(e == doctest::Approx(expected));

  Trajectory single;
  single.predictions = {x_star.col(1), x_star.col(1)};
  for (double e : per_step_errors(single, x.col(1))) CHECK(e == doctest::Approx(0.64));
}

TEST_CASE("evaluate report") {
  Rng rng(1);
  Eigen::MatrixXd x = rng.normal_matrix(2, 500);
  BatchTrajectory tr;
  tr.times = {1.0, 0.5};
  tr.predictions = {Eigen::MatrixXd::Zero(2, 500), x};
  tr.final = x;
  EvalReport r = evaluate(tr, x, x);
  CHECK(r.mse == 0.0);
  CHECK(r.si_sdr_db == kSiSdrCeilingDb);
  CHECK(r.w2 < 1e-6);
  CHECK(r.per_step_error.size() == 2);
  CHECK(r.per_step_error[1] == 0.0);
  CHECK(mse(Eigen::MatrixXd::Ones(2, 2), Eigen::MatrixXd::Zero(2, 2)) == 1.0);
}
