#include "sprvm/predict.hpp"

#include "sprvm/error.hpp"

namespace sprvm {

std::string to_string(Method m) { return m == Method::kRvm ? "rvm" : "sprvm"; }

Method parse_method(const std::string& name) {
  if (name == "rvm") return Method::kRvm;
  if (name == "sprvm") return Method::kSprvm;
  throw UsageError("unknown method '" + name + "' (expected rvm or sprvm)");
}

Eigen::VectorXd posterior_mean_beta(const Eigen::MatrixXd& beta_draws) {
  if (beta_draws.rows() < 1) throw UsageError("no draws to average");
  return beta_draws.colwise().mean().transpose();
}

Eigen::VectorXd posterior_mean_beta(const SprvmDraws& draws) { return posterior_mean_beta(draws.beta); }
Eigen::VectorXd posterior_mean_beta(const RvmDraws& draws) { return posterior_mean_beta(draws.beta); }

PosteriorSummary summarize(const SprvmDraws& draws, CovarianceMethod cov) {
  PosteriorSummary s;
  s.method = Method::kSprvm;
  s.beta_mean = posterior_mean_beta(draws);
  s.sigma = estimate_asymptotic_cov(draws.beta, cov);
  s.m_used = draws.M();
  return s;
}

PosteriorSummary summarize(const RvmDraws& draws) {
  PosteriorSummary s;
  s.method = Method::kRvm;
  s.beta_mean = posterior_mean_beta(draws);
  s.m_used = draws.M();
  return s;
}

PosteriorSummary summarize(const std::vector<SprvmDraws>& chains, CovarianceMethod cov) {
  if (chains.empty()) throw UsageError("no chains to summarize");
  PosteriorSummary s;
  s.method = Method::kSprvm;
  std::vector<BatchMeansCov> covs;
  s.beta_mean = Eigen::VectorXd::Zero(chains.front().beta.cols());
  for (const auto& c : chains) {
    s.beta_mean += c.beta.colwise().sum().transpose();
    s.m_used += c.M();
    covs.push_back(estimate_asymptotic_cov(c.beta, cov));
  }
  s.beta_mean /= static_cast<double>(s.m_used);
  s.sigma = pool_chains(covs);
  return s;
}

PosteriorSummary summarize(const std::vector<RvmDraws>& chains) {
  if (chains.empty()) throw UsageError("no chains to summarize");
  PosteriorSummary s;
  s.method = Method::kRvm;
  s.beta_mean = Eigen::VectorXd::Zero(chains.front().beta.cols());
  for (const auto& c : chains) {
    s.beta_mean += c.beta.colwise().sum().transpose();
    s.m_used += c.M();
  }
  s.beta_mean /= static_cast<double>(s.m_used);
  return s;
}

PredictionResult predict_from_row(const PosteriorSummary& summary, const Eigen::VectorXd& k_new,
                                  const std::optional<Standardization>& standardization) {
  if (k_new.size() != summary.beta_mean.size()) {
    throw UsageError("prediction row length does not match the coefficient count");
  }
  PredictionResult r;
  r.method = summary.method;
  r.m_used = summary.m_used;
  r.point_standardized = k_new.dot(summary.beta_mean);
  const double sd = standardization ? standardization->sd : 1.0;
  r.point = standardization ? standardization->inverse(r.point_standardized) : r.point_standardized;
  if (summary.method == Method::kSprvm) {
    if (!summary.sigma) throw UsageError("SPRVM summary is missing its covariance estimate");
    r.mcse_standardized = prediction_mcse(*summary.sigma, k_new);
    r.mcse = *r.mcse_standardized * sd;
  }
  return r;
}

PredictionResult predict_point(const SprvmDraws& draws, const KernelSpec& spec,
                               const Eigen::MatrixXd& X_train, const Eigen::VectorXd& x_new,
                               const std::optional<Standardization>& standardization) {
  return predict_from_row(summarize(draws), prediction_row(spec, X_train, x_new), standardization);
}

PredictionResult predict_point(const RvmDraws& draws, const KernelSpec& spec,
                               const Eigen::MatrixXd& X_train, const Eigen::VectorXd& x_new,
                               const std::optional<Standardization>& standardization) {
  return predict_from_row(summarize(draws), prediction_row(spec, X_train, x_new), standardization);
}

std::vector<PredictionResult> predict_batch(const PosteriorSummary& summary, const KernelSpec& spec,
                                            const Eigen::MatrixXd& X_train,
                                            const Eigen::MatrixXd& X_new,
                                            const std::optional<Standardization>& standardization) {
  std::vector<PredictionResult> out;
  out.reserve(static_cast<std::size_t>(X_new.rows()));
  for (Eigen::Index i = 0; i < X_new.rows(); ++i) {
    out.push_back(predict_from_row(summary, prediction_row(spec, X_train, X_new.row(i).transpose()),
                                   standardization));
  }
  return out;
}

}  // namespace sprvm
