#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sprvm/kernels.hpp"

namespace sprvm {

/// Gamma-form prior on the single penalty: pi(lambda) = lambda^{a-1} exp(-b lambda),
/// with normalizing constant fixed at one.
struct PenaltyPrior {
  double a = -1.0;
  double b = 0.0;
};

/// log f(y | lambda, xi) with beta integrated out, evaluated directly:
/// a Cholesky factor of K'K + (lambda/xi) I for the determinant and of the
/// n x n covariance xi^{-1} I + lambda^{-1} K K' for the quadratic form.
double log_density_y_given_lambda(double lambda, double xi, const DesignMatrix& K,
                                  const Eigen::VectorXd& y);

/// Same density through one eigen-decomposition of K K'. The nonzero
/// eigenvalues of K'K coincide with those of K K', and K'K has one extra
/// zero eigenvalue, so every (lambda, xi) costs O(n).
class CollapsedLikelihood {
 public:
  CollapsedLikelihood(const DesignMatrix& K, const Eigen::VectorXd& y);

  double log_density(double lambda, double xi) const;
  /// log of the integrand in u = log(lambda): log f + a u - b e^u.
  double log_integrand(double u, double xi, const PenaltyPrior& prior) const;

  Eigen::Index n() const { return projected_.size(); }

 private:
  Eigen::VectorXd eigenvalues_;  // of K K', clipped at zero
  Eigen::VectorXd projected_;    // U' y
};

enum class MarglikStatus { kFinite, kDivergent, kNonConvergent };
std::string to_string(MarglikStatus s);

struct MarglikValue {
  MarglikStatus status = MarglikStatus::kFinite;
  double log_value = 0.0;  // meaningful only when finite
  double relative_change = 0.0;  // last interval expansion
  double relative_error = 0.0;   // quadrature error estimate

  bool finite() const { return status == MarglikStatus::kFinite; }
};

/// log of the integral over lambda > 0 of f(y | lambda, xi) pi(lambda).
///
/// Adaptive Gauss-Kronrod quadrature in u = log(lambda) over [-40, 40],
/// expanded to [-60, 60] and [-80, 80]. The value is accepted once an
/// expansion changes it by at most 1e-8 relative; otherwise the integral is
/// reported as divergent. A quadrature error above 1e-6 relative is reported
/// as non-convergent.
MarglikValue log_marginal_likelihood(double xi, const DesignMatrix& K, const Eigen::VectorXd& y,
                                     const PenaltyPrior& prior = {});
MarglikValue log_marginal_likelihood(double xi, const CollapsedLikelihood& likelihood,
                                     const PenaltyPrior& prior = {});

struct MarglikGrid {
  std::vector<double> theta_values;
  std::vector<double> xi_values;
  Eigen::MatrixXd log_ml;  // theta x xi; NaN where not finite
  std::vector<std::vector<MarglikStatus>> status;
  double theta_hat = 0.0;
  double xi_hat = 0.0;
  double best_log_ml = 0.0;
  std::size_t excluded = 0;
};

/// Evaluates the marginal likelihood over the product grid and returns the
/// argmax over finite cells. Ties go to the smallest theta, then smallest xi.
/// Throws NumericError when no cell is finite.
MarglikGrid optimize_marglik(const std::vector<double>& theta_grid,
                             const std::vector<double>& xi_grid, const Eigen::MatrixXd& X,
                             const Eigen::VectorXd& y, KernelFamily family,
                             const PenaltyPrior& prior = {}, unsigned threads = 1);

}  // namespace sprvm
