#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include <Eigen/Dense>

namespace sprvm {

/// Seeded random stream shared by all samplers.
///
/// Every draw in the library goes through one of these, so a sampler's output
/// is a pure function of its seed. Independent streams for parallel chains,
/// folds or replicates are derived with `Rng::derive`.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Stream for sub-task `keys` of a run seeded with `seed`.
  static Rng derive(std::uint64_t seed, std::initializer_list<std::uint64_t> keys);

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }

  /// Gamma draw in the shape-rate parameterization (mean shape / rate).
  double gamma(double shape, double rate);

  /// Vector of independent standard normals.
  Eigen::VectorXd normal_vector(Eigen::Index size);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace sprvm
