#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sprvm/kernels.hpp"
#include "sprvm/random.hpp"

namespace sprvm {

/// Multi-penalty relevance vector machine: y ~ N(K beta, sigma^2 I),
/// beta ~ N(0, D^{-1}) with D = diag(lambda_0..lambda_n),
/// lambda_i ~ Gamma(a, b) and 1/sigma^2 with density prop. to
/// (1/sigma^2)^{c-1} exp(-d/sigma^2).
///
/// Defaults are the proper Gamma(0.001, 0.01) penalty prior (mean 0.1,
/// variance 10) and the improper 1/sigma^2 prior with c = d = 0.
struct RvmConfig {
  double a = 0.001;
  double b = 0.01;
  double c = 0.0;
  double d = 0.0;
  Eigen::Index M = 5000;
  Eigen::Index burn_in = 5000;
  std::uint64_t seed = 1;
  Eigen::VectorXd init_lambda = Eigen::VectorXd::Ones(1);  // size 1 broadcasts
  double init_inv_sigma2 = 1.0;

  void validate(Eigen::Index n) const;
  Eigen::VectorXd initial_lambdas(Eigen::Index dim) const;
};

struct RvmDraws {
  Eigen::MatrixXd beta;     // M x (n+1)
  Eigen::MatrixXd lambdas;  // M x (n+1)
  Eigen::VectorXd inv_sigma2;
  RvmConfig config;
  KernelSpec kernel;

  Eigen::Index M() const { return beta.rows(); }
};

/// Precomputed pieces shared by every beta draw on one design.
class RvmBetaConditional {
 public:
  RvmBetaConditional(const DesignMatrix& K, const Eigen::VectorXd& y);

  /// (K'K + D sigma^2)^{-1} K'y
  Eigen::VectorXd mean(const Eigen::VectorXd& lambdas, double inv_sigma2) const;
  /// (K'K / sigma^2 + D)^{-1}
  Eigen::MatrixXd covariance(const Eigen::VectorXd& lambdas, double inv_sigma2) const;
  Eigen::VectorXd draw(const Eigen::VectorXd& lambdas, double inv_sigma2, Rng& rng) const;

 private:
  Eigen::MatrixXd precision(const Eigen::VectorXd& lambdas, double inv_sigma2) const;

  Eigen::MatrixXd gram_;  // K'K
  Eigen::VectorXd kty_;   // K'y
};

Eigen::VectorXd rvm_sample_beta(const DesignMatrix& K, const Eigen::VectorXd& y,
                                const Eigen::VectorXd& lambdas, double inv_sigma2, Rng& rng);

/// Gamma(n/2 + c, |y - K beta|^2 / 2 + d).
double rvm_sample_inv_sigma2(const DesignMatrix& K, const Eigen::VectorXd& y,
                             const Eigen::VectorXd& beta, double c, double d, Rng& rng);

/// Gamma(a + 1/2, beta_i^2 / 2 + b).
double rvm_sample_lambda_i(double beta_i, double a, double b, Rng& rng);

/// Fixed scan: given beta, draw 1/sigma^2 then every lambda_i, then beta.
/// The chain starts from a beta drawn at the configured initial penalties.
RvmDraws rvm_run_gibbs(const RvmConfig& config, const DesignMatrix& K, const Eigen::VectorXd& y);

/// Independent chains with derived seeds and over-dispersed initial values.
std::vector<RvmDraws> rvm_run_gibbs_chains(const RvmConfig& config, const DesignMatrix& K,
                                           const Eigen::VectorXd& y, int chains, unsigned threads);

}  // namespace sprvm
