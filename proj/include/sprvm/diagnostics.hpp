#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sprvm {

struct PsrfReport {
  std::vector<std::string> names;
  Eigen::VectorXd per_parameter;
  double max_psrf = 0.0;
  Eigen::Index chains = 0;
  Eigen::Index draws_per_chain = 0;
};

/// Gelman-Rubin potential scale reduction factor, unsplit chains.
///
/// With m chains of length n, W the mean within-chain variance and B / n the
/// variance of the chain means,
///   V = (n-1)/n W + (m+1)/(m n) B,   PSRF = sqrt(V / W).
/// Each matrix holds one chain (rows are draws, columns parameters).
/// Throws on mismatched shapes, fewer than two chains or ten draws, and on a
/// parameter with zero within-chain variance.
PsrfReport psrf(const std::vector<Eigen::MatrixXd>& chains,
                const std::vector<std::string>& names = {});

enum class CovarianceMethod { kBatchMeans, kSpectral };
std::string to_string(CovarianceMethod m);
CovarianceMethod parse_covariance_method(const std::string& name);

/// Estimate of the asymptotic covariance of the chain mean.
struct BatchMeansCov {
  Eigen::MatrixXd sigma_hat;
  Eigen::Index batch_size = 0;
  Eigen::Index batch_count = 0;
  Eigen::Index M = 0;
  CovarianceMethod method = CovarianceMethod::kBatchMeans;
};

/// Non-overlapping batch means with batch size floor(sqrt(M)); trailing draws
/// that do not fill a batch are dropped. Requires M >= 100.
BatchMeansCov batch_means_cov(const Eigen::MatrixXd& draws);

/// Tukey-Hanning lag window truncated at floor(sqrt(M)). Requires M >= 100.
BatchMeansCov spectral_variance_cov(const Eigen::MatrixXd& draws);

BatchMeansCov estimate_asymptotic_cov(const Eigen::MatrixXd& draws, CovarianceMethod method);

/// Averages per-chain estimates from independent chains; M becomes the total
/// draw count so prediction_mcse stays sqrt(k' Sigma k / M).
BatchMeansCov pool_chains(const std::vector<BatchMeansCov>& per_chain);

/// sqrt(k' Sigma_hat k / M). Small negative quadratic forms are clamped to
/// zero; anything below -1e-8 * trace(Sigma_hat) * |k|^2 throws NumericError.
double prediction_mcse(const BatchMeansCov& sigma, const Eigen::VectorXd& k_new);

}  // namespace sprvm
