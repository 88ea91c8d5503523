#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace rsb {

/// Seeded random stream with named, state-independent splitting.
///
/// A child stream is a pure function of the parent's seed and the child's
/// name: `Rng(1).split("bridge").split("train")` is the same stream no
/// matter how many draws the parent has made. The lineage string records
/// the path ("1/bridge/train") and is written into checkpoints.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  Rng split(std::string_view name) const;

  double normal();
  double uniform(double lo, double hi);
  Eigen::VectorXd normal_vector(Eigen::Index n);
  /// Column-major fill, so a single-column request matches normal_vector.
  Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols);

  std::uint64_t seed() const { return seed_; }
  const std::string& lineage() const { return lineage_; }
  std::mt19937_64& engine() { return engine_; }

 private:
  Rng(std::uint64_t seed, std::string lineage);

  std::uint64_t seed_;
  std::string lineage_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// 64-bit FNV-1a; used for stream-name hashing and checkpoint fingerprints.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace rsb
