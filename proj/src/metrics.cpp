#include "rsb/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "rsb/errors.hpp"

namespace rsb {
namespace {

struct Moments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

Moments moments(const Eigen::MatrixXd& samples) {
  if (samples.cols() == 0) throw std::invalid_argument("empty sample set");
  Moments m;
  m.mean = samples.rowwise().mean();
  Eigen::MatrixXd centered = samples.colwise() - m.mean;
  m.cov = centered * centered.transpose() / double(samples.cols());
  return m;
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

// Adds a 1e-9 ridge to a covariance whose smallest eigenvalue is not
// clearly positive. Returns true if the ridge was applied.
bool regularize(Eigen::MatrixXd& cov) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() > 1e-12) return false;
  cov.diagonal().array() += 1e-9;
  return true;
}

double mean_pairwise_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < a.cols(); ++i) {
    double row = 0.0;
    for (Eigen::Index j = 0; j < b.cols(); ++j) row += (a.col(i) - b.col(j)).norm();
    acc += row;
  }
  return acc / (double(a.cols()) * double(b.cols()));
}

}  // namespace

double si_sdr(const Eigen::VectorXd& estimate, const Eigen::VectorXd& reference, double ceiling_db) {
  if (estimate.size() != reference.size()) throw DimensionError("si_sdr: size mismatch");
  double ref_energy = reference.squaredNorm();
  if (ref_energy == 0.0) throw std::invalid_argument("si_sdr: zero reference");
  Eigen::VectorXd target = (estimate.dot(reference) / ref_energy) * reference;
  Eigen::VectorXd residual = estimate - target;
  double s = target.squaredNorm();
  double e = residual.squaredNorm();
  if (s == 0.0) return -std::numeric_limits<double>::infinity();
  if (e == 0.0) return ceiling_db;
  return std::min(ceiling_db, 10.0 * std::log10(s / e));
}

double gaussian_w2(const Eigen::VectorXd& m1, const Eigen::MatrixXd& c1, const Eigen::VectorXd& m2,
                   const Eigen::MatrixXd& c2) {
  if (m1.size() != m2.size()) throw DimensionError("gaussian_w2: dimension mismatch");
  Eigen::MatrixXd r2 = psd_sqrt(c2);
  Eigen::MatrixXd cross = psd_sqrt(r2 * c1 * r2);
  double sq = (m1 - m2).squaredNorm() + (c1 + c2 - 2.0 * cross).trace();
  return std::sqrt(std::max(0.0, sq));
}

double energy_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.cols() == 0 || b.cols() == 0) throw std::invalid_argument("energy_distance: empty set");
  if (a.rows() != b.rows()) throw DimensionError("energy_distance: dimension mismatch");
  double v = 2.0 * mean_pairwise_distance(a, b) - mean_pairwise_distance(a, a) -
             mean_pairwise_distance(b, b);
  return std::max(0.0, v);
}

double moment_w2(const Eigen::MatrixXd& outputs, const Eigen::MatrixXd& reference) {
  if (outputs.rows() != reference.rows()) throw DimensionError("perception: dimension mismatch");
  Moments a = moments(outputs);
  Moments b = moments(reference);
  regularize(a.cov);
  regularize(b.cov);
  return gaussian_w2(a.mean, a.cov, b.mean, b.cov);
}

PerceptionDistance perception_distance(const Eigen::MatrixXd& outputs,
                                       const Eigen::MatrixXd& reference) {
  if (outputs.rows() != reference.rows()) throw DimensionError("perception: dimension mismatch");
  Moments a = moments(outputs);
  Moments b = moments(reference);
  PerceptionDistance d;
  d.regularized = regularize(a.cov);
  d.regularized = regularize(b.cov) || d.regularized;
  d.w2 = gaussian_w2(a.mean, a.cov, b.mean, b.cov);
  d.energy_distance = energy_distance(outputs, reference);
  return d;
}

double mse(const Eigen::MatrixXd& estimate, const Eigen::MatrixXd& reference) {
  if (estimate.rows() != reference.rows() || estimate.cols() != reference.cols())
    throw DimensionError("mse: shape mismatch");
  return (estimate - reference).squaredNorm() / double(estimate.size());
}

std::vector<double> per_step_errors(const Trajectory& trajectory, const Eigen::VectorXd& x_true) {
  std::vector<double> out;
  out.reserve(trajectory.predictions.size());
  for (const auto& p : trajectory.predictions) {
    if (p.size() != x_true.size()) throw DimensionError("per_step_errors: size mismatch");
    out.push_back((p - x_true).squaredNorm());
  }
  return out;
}

std::vector<double> per_step_errors(const BatchTrajectory& trajectory, const Eigen::MatrixXd& x_true) {
  std::vector<double> out;
  out.reserve(trajectory.predictions.size());
  for (const auto& p : trajectory.predictions) {
    if (p.rows() != x_true.rows() || p.cols() != x_true.cols())
      throw DimensionError("per_step_errors: shape mismatch");
    out.push_back((p - x_true).squaredNorm() / double(x_true.cols()));
  }
  return out;
}

EvalReport evaluate(const BatchTrajectory& trajectory, const Eigen::MatrixXd& x_true,
                    const Eigen::MatrixXd& clean_reference) {
  EvalReport r;
  r.mse = mse(trajectory.final, x_true);
  Eigen::Map<const Eigen::VectorXd> est(trajectory.final.data(), trajectory.final.size());
  Eigen::Map<const Eigen::VectorXd> ref(x_true.data(), x_true.size());
  r.si_sdr_db = si_sdr(est, ref);
  PerceptionDistance pd = perception_distance(trajectory.final, clean_reference);
  r.w2 = pd.w2;
  r.energy_distance = pd.energy_distance;
  r.covariance_regularized = pd.regularized;
  r.per_step_error = per_step_errors(trajectory, x_true);
  return r;
}

}  // namespace rsb
