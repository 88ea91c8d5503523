#include "rsb/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "rsb/errors.hpp"

namespace rsb {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_spd(const Eigen::MatrixXd& m, const char* name) {
  if (m.rows() != m.cols()) throw ConfigError(std::string(name) + " must be square");
  if (!m.isApprox(m.transpose(), 1e-12)) throw ConfigError(std::string(name) + " must be symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success)
    throw ConfigError(std::string(name) + " must be positive definite");
}

Eigen::MatrixXd cholesky_factor(const Eigen::MatrixXd& m) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) throw std::runtime_error("covariance is not positive definite");
  return llt.matrixL();
}

double mixture_posterior_mean_1d(const MixtureTask& task, double y) {
  const std::size_t n = task.centers.size();
  const double var_y = task.s2 + task.noise_var;
  const double gain = task.s2 / var_y;
  std::vector<double> logr(n);
  for (std::size_t i = 0; i < n; ++i) {
    double d = y - task.centers[i];
    logr[i] = std::log(task.weights[i]) - 0.5 * d * d / var_y;
  }
  double top = *std::max_element(logr.begin(), logr.end());
  double norm = 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double r = std::exp(logr[i] - top);
    norm += r;
    acc += r * (task.centers[i] + gain * (y - task.centers[i]));
  }
  return acc / norm;
}

}  // namespace

void LinearGaussianTask::validate() const {
  const auto d = mu0.size();
  if (d < 1) throw ConfigError("task.mu0 must be nonempty");
  if (Sigma0.rows() != d) throw ConfigError("task.Sigma0 must be d x d");
  require_spd(Sigma0, "task.Sigma0");
  if (A.cols() != d || A.rows() < 1) throw ConfigError("task.A must be m x d");
  if (Sigma_n.rows() != A.rows()) throw ConfigError("task.Sigma_n must be m x m");
  require_spd(Sigma_n, "task.Sigma_n");
}

void MixtureTask::validate() const {
  if (centers.empty() || centers.size() != weights.size())
    throw ConfigError("task.centers and task.weights must be nonempty and equally long");
  for (double w : weights)
    if (!(w > 0.0)) throw ConfigError("task.weights must be positive");
  double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("task.weights must sum to 1");
  if (!(s2 > 0.0) || !(noise_var > 0.0)) throw ConfigError("task variances must be positive");
  if (dim < 1) throw ConfigError("task.dim must be positive");
}

void validate(const Task& task) {
  std::visit([](const auto& t) { t.validate(); }, task);
}

int data_dim(const Task& task) {
  return std::visit(Overloaded{[](const LinearGaussianTask& t) { return int(t.mu0.size()); },
                               [](const MixtureTask& t) { return t.dim; }},
                    task);
}

int measurement_dim(const Task& task) {
  return std::visit(Overloaded{[](const LinearGaussianTask& t) { return int(t.A.rows()); },
                               [](const MixtureTask& t) { return t.dim; }},
                    task);
}

Eigen::VectorXd prior_mean(const Task& task) {
  return std::visit(
      Overloaded{[](const LinearGaussianTask& t) -> Eigen::VectorXd { return t.mu0; },
                 [](const MixtureTask& t) -> Eigen::VectorXd {
                   double m = 0.0;
                   for (std::size_t i = 0; i < t.centers.size(); ++i) m += t.weights[i] * t.centers[i];
                   return Eigen::VectorXd::Constant(t.dim, m);
                 }},
      task);
}

double prior_variance(const Task& task) {
  return std::visit(Overloaded{[](const LinearGaussianTask& t) { return t.Sigma0.trace() / t.mu0.size(); },
                               [](const MixtureTask& t) {
                                 // Law of total variance.
                                 double m = 0.0, m2 = 0.0;
                                 for (std::size_t i = 0; i < t.centers.size(); ++i) {
                                   m += t.weights[i] * t.centers[i];
                                   m2 += t.weights[i] * t.centers[i] * t.centers[i];
                                 }
                                 return t.s2 + m2 - m * m;
                               }},
                    task);
}

Eigen::VectorXd sample_clean(const Task& task, Rng& rng) {
  return std::visit(
      Overloaded{[&](const LinearGaussianTask& t) -> Eigen::VectorXd {
                   return t.mu0 + cholesky_factor(t.Sigma0) * rng.normal_vector(t.mu0.size());
                 },
                 [&](const MixtureTask& t) -> Eigen::VectorXd {
                   std::discrete_distribution<int> pick(t.weights.begin(), t.weights.end());
                   Eigen::VectorXd x(t.dim);
                   for (int i = 0; i < t.dim; ++i) {
                     int c = pick(rng.engine());
                     x[i] = t.centers[c] + std::sqrt(t.s2) * rng.normal();
                   }
                   return x;
                 }},
      task);
}

Eigen::VectorXd measure(const Task& task, const Eigen::VectorXd& x, Rng& rng) {
  if (x.size() != data_dim(task)) throw DimensionError("clean vector has wrong dimension");
  return std::visit(
      Overloaded{[&](const LinearGaussianTask& t) -> Eigen::VectorXd {
                   return t.A * x + cholesky_factor(t.Sigma_n) * rng.normal_vector(t.A.rows());
                 },
                 [&](const MixtureTask& t) -> Eigen::VectorXd {
                   return x + std::sqrt(t.noise_var) * rng.normal_vector(t.dim);
                 }},
      task);
}

Eigen::VectorXd posterior_mean(const Task& task, const Eigen::VectorXd& y) {
  if (y.size() != measurement_dim(task)) throw DimensionError("measurement has wrong dimension");
  return std::visit(
      Overloaded{[&](const LinearGaussianTask& t) -> Eigen::VectorXd {
                   Eigen::MatrixXd s = t.A * t.Sigma0 * t.A.transpose() + t.Sigma_n;
                   Eigen::LDLT<Eigen::MatrixXd> ldlt(s);
                   if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
                     throw std::runtime_error("posterior system matrix is singular");
                   return t.mu0 + t.Sigma0 * t.A.transpose() * ldlt.solve(y - t.A * t.mu0);
                 },
                 [&](const MixtureTask& t) -> Eigen::VectorXd {
                   Eigen::VectorXd out(t.dim);
                   for (int i = 0; i < t.dim; ++i) out[i] = mixture_posterior_mean_1d(t, y[i]);
                   return out;
                 }},
      task);
}

TrainingPair sample_pair(const Task& task, Rng& rng) {
  TrainingPair pair;
  pair.x = sample_clean(task, rng);
  pair.y = measure(task, pair.x, rng);
  pair.x_star = posterior_mean(task, pair.y);
  return pair;
}

Eigen::MatrixXd clean_sampler(const Task& task, int n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("clean_sampler needs n >= 1");
  Eigen::MatrixXd out(data_dim(task), n);
  for (int j = 0; j < n; ++j) out.col(j) = sample_clean(task, rng);
  return out;
}

}  // namespace rsb
