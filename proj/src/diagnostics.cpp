#include "sprvm/diagnostics.hpp"

#include <cmath>
#include <numbers>

#include "sprvm/error.hpp"

namespace sprvm {

PsrfReport psrf(const std::vector<Eigen::MatrixXd>& chains, const std::vector<std::string>& names) {
  if (chains.size() < 2) throw UsageError("PSRF needs at least two chains");
  const auto n = chains.front().rows();
  const auto P = chains.front().cols();
  for (const auto& c : chains) {
    if (c.rows() != n || c.cols() != P) throw UsageError("PSRF chains must share one shape");
  }
  if (n < 10) throw UsageError("PSRF needs at least ten draws per chain");
  if (!names.empty() && static_cast<Eigen::Index>(names.size()) != P) {
    throw UsageError("PSRF parameter names do not match the column count");
  }

  const auto m = static_cast<Eigen::Index>(chains.size());
  const double dn = static_cast<double>(n);
  const double dm = static_cast<double>(m);
  Eigen::MatrixXd means(m, P);
  Eigen::MatrixXd vars(m, P);
  for (Eigen::Index j = 0; j < m; ++j) {
    const auto& c = chains[static_cast<std::size_t>(j)];
    Eigen::RowVectorXd mu = c.colwise().mean();
    means.row(j) = mu;
    vars.row(j) = (c.rowwise() - mu).colwise().squaredNorm() / (dn - 1.0);
  }

  PsrfReport report;
  report.chains = m;
  report.draws_per_chain = n;
  report.per_parameter.resize(P);
  report.names = names;
  if (report.names.empty()) {
    for (Eigen::Index p = 0; p < P; ++p) report.names.push_back("param" + std::to_string(p));
  }
  Eigen::RowVectorXd grand = means.colwise().mean();
  for (Eigen::Index p = 0; p < P; ++p) {
    const double W = vars.col(p).mean();
    if (!(W > 0.0)) {
      throw NumericError("PSRF undefined for '" + report.names[static_cast<std::size_t>(p)] +
                         "': zero within-chain variance");
    }
    const double B = dn / (dm - 1.0) * (means.col(p).array() - grand[p]).square().sum();
    const double V = (dn - 1.0) / dn * W + (dm + 1.0) / (dm * dn) * B;
    report.per_parameter[p] = std::sqrt(V / W);
  }
  report.max_psrf = report.per_parameter.maxCoeff();
  return report;
}

std::string to_string(CovarianceMethod m) {
  return m == CovarianceMethod::kBatchMeans ? "batch-means" : "spectral";
}

CovarianceMethod parse_covariance_method(const std::string& name) {
  if (name == "batch-means" || name == "bm") return CovarianceMethod::kBatchMeans;
  if (name == "spectral" || name == "sv") return CovarianceMethod::kSpectral;
  throw UsageError("unknown covariance estimator '" + name + "' (expected batch-means or spectral)");
}

BatchMeansCov batch_means_cov(const Eigen::MatrixXd& draws) {
  const auto M = draws.rows();
  if (M < 100) throw UsageError("batch means needs at least 100 draws");
  const auto size = static_cast<Eigen::Index>(std::floor(std::sqrt(static_cast<double>(M))));
  const auto count = M / size;
  const auto P = draws.cols();

  Eigen::MatrixXd batch(count, P);
  for (Eigen::Index k = 0; k < count; ++k) {
    batch.row(k) = draws.middleRows(k * size, size).colwise().mean();
  }
  Eigen::RowVectorXd overall = batch.colwise().mean();
  Eigen::MatrixXd centered = batch.rowwise() - overall;

  BatchMeansCov out;
  out.sigma_hat = static_cast<double>(size) / static_cast<double>(count - 1) *
                  (centered.transpose() * centered);
  out.sigma_hat = 0.5 * (out.sigma_hat + out.sigma_hat.transpose()).eval();
  out.batch_size = size;
  out.batch_count = count;
  out.M = M;
  out.method = CovarianceMethod::kBatchMeans;
  return out;
}

BatchMeansCov spectral_variance_cov(const Eigen::MatrixXd& draws) {
  const auto M = draws.rows();
  if (M < 100) throw UsageError("spectral variance needs at least 100 draws");
  const auto b = static_cast<Eigen::Index>(std::floor(std::sqrt(static_cast<double>(M))));
  Eigen::RowVectorXd mean = draws.colwise().mean();
  Eigen::MatrixXd centered = draws.rowwise() - mean;
  const double dM = static_cast<double>(M);

  Eigen::MatrixXd sigma = centered.transpose() * centered / dM;
  for (Eigen::Index k = 1; k < b; ++k) {
    const double w = 0.5 * (1.0 + std::cos(std::numbers::pi * static_cast<double>(k) / static_cast<double>(b)));
    Eigen::MatrixXd gamma = centered.topRows(M - k).transpose() * centered.bottomRows(M - k) / dM;
    sigma += w * (gamma + gamma.transpose());
  }
  BatchMeansCov out;
  out.sigma_hat = 0.5 * (sigma + sigma.transpose());
  out.batch_size = b;
  out.batch_count = 0;
  out.M = M;
  out.method = CovarianceMethod::kSpectral;
  return out;
}

BatchMeansCov estimate_asymptotic_cov(const Eigen::MatrixXd& draws, CovarianceMethod method) {
  return method == CovarianceMethod::kBatchMeans ? batch_means_cov(draws) : spectral_variance_cov(draws);
}

BatchMeansCov pool_chains(const std::vector<BatchMeansCov>& per_chain) {
  if (per_chain.empty()) throw UsageError("no chains to pool");
  BatchMeansCov out = per_chain.front();
  out.M = 0;
  out.sigma_hat.setZero();
  for (const auto& c : per_chain) {
    if (c.sigma_hat.rows() != out.sigma_hat.rows()) throw UsageError("chains differ in dimension");
    out.sigma_hat += c.sigma_hat;
    out.M += c.M;
  }
  out.sigma_hat /= static_cast<double>(per_chain.size());
  return out;
}

double prediction_mcse(const BatchMeansCov& sigma, const Eigen::VectorXd& k_new) {
  if (k_new.size() != sigma.sigma_hat.rows()) {
    throw UsageError("prediction row length does not match the covariance dimension");
  }
  if (sigma.M < 1) throw UsageError("covariance estimate has no draws");
  const double quad = k_new.dot(sigma.sigma_hat * k_new);
  if (quad < 0.0) {
    const double scale = std::abs(sigma.sigma_hat.trace()) * k_new.squaredNorm();
    if (quad < -1e-8 * scale) {
      throw NumericError("negative quadratic form in prediction MCSE; covariance estimate is broken");
    }
    return 0.0;
  }
  return std::sqrt(quad / static_cast<double>(sigma.M));
}

}  // namespace sprvm
