#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sprvm/kernels.hpp"
#include "sprvm/linalg.hpp"
#include "sprvm/random.hpp"

namespace sprvm {

/// Single-penalty model: y ~ N(K beta, xi^{-1} I), beta ~ N(0, lambda^{-1} I),
/// pi(lambda) proportional to lambda^{a-1} exp(-b lambda). xi is fixed.
struct SprvmConfig {
  double a = -1.0;  // improper 1/lambda^2 prior by default
  double b = 0.0;
  double xi = 1.0;
  Eigen::Index M = 5000;        // retained scans
  Eigen::Index burn_in = 5000;  // discarded scans
  std::uint64_t seed = 1;
  double init_lambda = 1.0;

  void validate() const;
};

struct SprvmDraws {
  Eigen::MatrixXd beta;    // M x (n+1)
  Eigen::VectorXd lambda;  // M
  SprvmConfig config;
  KernelSpec kernel;
  std::vector<std::string> warnings;

  Eigen::Index M() const { return beta.rows(); }
};

enum class Tristate { kHolds, kFails, kNotApplicable };
std::string to_string(Tristate t);

struct ProprietyReport {
  Tristate necessary_ok = Tristate::kNotApplicable;
  bool sufficient_ok = false;
  bool condition_i = false;
  std::optional<double> condition_ii_s;  // empty when condition (ii) fails
  bool condition_iii = false;
  bool full_row_rank = false;
  std::string notes;

  bool condition_ii() const { return condition_ii_s.has_value(); }
};

/// Precomputed Gaussian full conditional of beta given lambda.
///
/// K'K is diagonalized once, so every conditional with precision
/// xi K'K + lambda I shares one eigenbasis and a draw costs one matrix-vector
/// product.
class BetaConditional {
 public:
  BetaConditional(const DesignMatrix& K, const Eigen::VectorXd& y);

  /// (K'K + lambda/xi I)^{-1} K'y
  Eigen::VectorXd mean(double lambda, double xi) const;
  /// (xi K'K + lambda I)^{-1}
  Eigen::MatrixXd covariance(double lambda, double xi) const;
  /// E[beta'beta | lambda] = |mean|^2 + trace(covariance).
  double expected_squared_norm(double lambda, double xi) const;
  Eigen::VectorXd draw(double lambda, double xi, Rng& rng) const;

  Eigen::Index dim() const { return gram_.values.size(); }

 private:
  void check(double lambda, double xi) const;

  SpectralGram gram_;
  Eigen::VectorXd projected_;  // Q' K' y
};

/// One draw of beta | lambda, xi, y.
Eigen::VectorXd sample_beta_given_lambda(const DesignMatrix& K, const Eigen::VectorXd& y,
                                         double lambda, double xi, Rng& rng);

/// One draw of lambda | beta from Gamma((n+1)/2 + a, beta'beta/2 + b).
double sample_lambda_given_beta(const Eigen::VectorXd& beta, double a, double b, Rng& rng);

/// Sufficient and necessary propriety conditions for prior (a, b) with n
/// training rows and design K.
ProprietyReport check_propriety(double a, double b, Eigen::Index n, const DesignMatrix& K);

/// Fixed-scan two-block Gibbs sampler (beta given lambda, then lambda given
/// beta). Throws ImproprietyError when the posterior is provably improper.
SprvmDraws run_gibbs(const SprvmConfig& config, const DesignMatrix& K, const Eigen::VectorXd& y);

/// Independent chains with derived seeds and over-dispersed initial lambda
/// (init_lambda * 10^(c - (chains-1)/2) for chain c).
std::vector<SprvmDraws> run_gibbs_chains(const SprvmConfig& config, const DesignMatrix& K,
                                         const Eigen::VectorXd& y, int chains, unsigned threads);

/// v(lambda) = lambda^m + lambda^{-s}
double drift_function(double lambda, double m, double s);

struct DriftReport {
  double rho_hat = 0.0;        // least-squares slope of E[v(lambda') | lambda] on v(lambda)
  double intercept_hat = 0.0;  // least-squares intercept
  double envelope_L = 0.0;     // smallest L with E <= L + rho_hat v on the grid
  bool linear_fit_ok = false;
  Eigen::VectorXd grid;
  Eigen::VectorXd v;
  Eigen::VectorXd expected;  // Monte Carlo estimate of E[v(lambda') | lambda]
  Eigen::VectorXd std_error;
};

/// Empirical drift check over `lambda_grid`, `reps` one-scan replicates per
/// grid point. linear_fit_ok requires rho_hat < 1 and E[v]/v < 1 (within four
/// standard errors) at both ends of the grid.
DriftReport drift_check(const SprvmConfig& config, const DesignMatrix& K, const Eigen::VectorXd& y,
                        const Eigen::VectorXd& lambda_grid, double m, double s, Eigen::Index reps);

}  // namespace sprvm
