#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sprvm/data.hpp"
#include "sprvm/diagnostics.hpp"
#include "sprvm/kernels.hpp"
#include "sprvm/rvm.hpp"
#include "sprvm/sprvm.hpp"

namespace sprvm {

enum class Method { kRvm, kSprvm };
std::string to_string(Method m);
Method parse_method(const std::string& name);

struct PredictionResult {
  double point = 0.0;               // raw response scale
  double point_standardized = 0.0;
  std::optional<double> mcse;       // raw scale; SPRVM only
  std::optional<double> mcse_standardized;
  Method method = Method::kSprvm;
  Eigen::Index m_used = 0;
};

/// Columnwise mean of retained beta draws.
Eigen::VectorXd posterior_mean_beta(const Eigen::MatrixXd& beta_draws);
Eigen::VectorXd posterior_mean_beta(const SprvmDraws& draws);
Eigen::VectorXd posterior_mean_beta(const RvmDraws& draws);

/// A fitted model reduced to what prediction needs: the posterior mean of
/// beta and, for SPRVM, the asymptotic covariance estimate behind the MCSE.
struct PosteriorSummary {
  Method method = Method::kSprvm;
  Eigen::VectorXd beta_mean;
  std::optional<BatchMeansCov> sigma;  // present iff method is SPRVM
  Eigen::Index m_used = 0;
};

PosteriorSummary summarize(const SprvmDraws& draws,
                           CovarianceMethod cov = CovarianceMethod::kBatchMeans);
PosteriorSummary summarize(const RvmDraws& draws);
/// Pools independent chains: beta mean over all draws, per-chain covariance
/// estimates averaged (see pool_chains).
PosteriorSummary summarize(const std::vector<SprvmDraws>& chains,
                           CovarianceMethod cov = CovarianceMethod::kBatchMeans);
PosteriorSummary summarize(const std::vector<RvmDraws>& chains);

/// Prediction from an explicit prediction row (1, k(x_new, x_1), ...).
PredictionResult predict_from_row(const PosteriorSummary& summary, const Eigen::VectorXd& k_new,
                                  const std::optional<Standardization>& standardization);

PredictionResult predict_point(const SprvmDraws& draws, const KernelSpec& spec,
                               const Eigen::MatrixXd& X_train, const Eigen::VectorXd& x_new,
                               const std::optional<Standardization>& standardization);
PredictionResult predict_point(const RvmDraws& draws, const KernelSpec& spec,
                               const Eigen::MatrixXd& X_train, const Eigen::VectorXd& x_new,
                               const std::optional<Standardization>& standardization);

/// Predictions for every row of X_new; the covariance estimate is computed
/// once and reused for each point.
std::vector<PredictionResult> predict_batch(const PosteriorSummary& summary, const KernelSpec& spec,
                                            const Eigen::MatrixXd& X_train,
                                            const Eigen::MatrixXd& X_new,
                                            const std::optional<Standardization>& standardization);

}  // namespace sprvm
