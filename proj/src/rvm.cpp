#include "sprvm/rvm.hpp"

#include <cmath>
#include <sstream>

#include "sprvm/error.hpp"
#include "sprvm/linalg.hpp"
#include "sprvm/parallel.hpp"

namespace sprvm {

void RvmConfig::validate(Eigen::Index n) const {
  if (M < 1) throw UsageError("retained draw count M must be at least 1");
  if (burn_in < 0) throw UsageError("burn-in must be non-negative");
  if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c) || !std::isfinite(d)) {
    throw UsageError("hyperparameters (a, b, c, d) must be finite");
  }
  if (init_lambda.size() != 1 && init_lambda.size() != n + 1) {
    throw UsageError("initial lambda must be a scalar or have n+1 entries");
  }
  if (!(init_lambda.array() > 0.0).all() || !init_lambda.allFinite()) {
    throw UsageError("initial lambdas must be positive");
  }
  if (!(init_inv_sigma2 > 0.0) || !std::isfinite(init_inv_sigma2)) {
    throw UsageError("initial 1/sigma^2 must be positive");
  }
}

Eigen::VectorXd RvmConfig::initial_lambdas(Eigen::Index dim) const {
  if (init_lambda.size() == 1) return Eigen::VectorXd::Constant(dim, init_lambda[0]);
  return init_lambda;
}

RvmBetaConditional::RvmBetaConditional(const DesignMatrix& K, const Eigen::VectorXd& y) {
  if (y.size() != K.n()) throw UsageError("response length does not match design rows");
  gram_ = K.K().transpose() * K.K();
  kty_ = K.K().transpose() * y;
}

Eigen::MatrixXd RvmBetaConditional::precision(const Eigen::VectorXd& lambdas,
                                              double inv_sigma2) const {
  if (lambdas.size() != gram_.rows()) throw UsageError("penalty vector must have n+1 entries");
  if (!(lambdas.array() > 0.0).all() || !(inv_sigma2 > 0.0)) {
    throw NumericError("beta conditional needs positive penalties and 1/sigma^2");
  }
  Eigen::MatrixXd P = inv_sigma2 * gram_;
  P.diagonal() += lambdas;
  return P;
}

Eigen::VectorXd RvmBetaConditional::mean(const Eigen::VectorXd& lambdas, double inv_sigma2) const {
  // (K'K/s2 + D)^{-1} K'y / s2 equals (K'K + D s2)^{-1} K'y.
  auto factor = factor_spd(precision(lambdas, inv_sigma2), "RVM beta conditional");
  return factor.solve(inv_sigma2 * kty_);
}

Eigen::MatrixXd RvmBetaConditional::covariance(const Eigen::VectorXd& lambdas,
                                               double inv_sigma2) const {
  auto factor = factor_spd(precision(lambdas, inv_sigma2), "RVM beta conditional");
  return factor.solve(Eigen::MatrixXd::Identity(gram_.rows(), gram_.cols()));
}

Eigen::VectorXd RvmBetaConditional::draw(const Eigen::VectorXd& lambdas, double inv_sigma2,
                                         Rng& rng) const {
  auto factor = factor_spd(precision(lambdas, inv_sigma2), "RVM beta conditional");
  return sample_gaussian_canonical(factor, inv_sigma2 * kty_, rng.normal_vector(gram_.rows()));
}

Eigen::VectorXd rvm_sample_beta(const DesignMatrix& K, const Eigen::VectorXd& y,
                                const Eigen::VectorXd& lambdas, double inv_sigma2, Rng& rng) {
  return RvmBetaConditional(K, y).draw(lambdas, inv_sigma2, rng);
}

double rvm_sample_inv_sigma2(const DesignMatrix& K, const Eigen::VectorXd& y,
                             const Eigen::VectorXd& beta, double c, double d, Rng& rng) {
  const double shape = 0.5 * static_cast<double>(K.n()) + c;
  const double rate = 0.5 * (y - K.K() * beta).squaredNorm() + d;
  if (!(shape > 0.0) || !(rate > 0.0) || !std::isfinite(rate)) {
    std::ostringstream msg;
    msg << "1/sigma^2 conditional has non-positive parameters (shape = " << shape
        << ", rate = " << rate << ")";
    throw NumericError(msg.str());
  }
  return rng.gamma(shape, rate);
}

double rvm_sample_lambda_i(double beta_i, double a, double b, Rng& rng) {
  const double shape = a + 0.5;
  const double rate = 0.5 * beta_i * beta_i + b;
  if (!(shape > 0.0) || !(rate > 0.0) || !std::isfinite(rate)) {
    std::ostringstream msg;
    msg << "lambda_i conditional has non-positive parameters (shape = " << shape
        << ", rate = " << rate << ")";
    throw NumericError(msg.str());
  }
  const double draw = rng.gamma(shape, rate);
  if (!(draw > 0.0) || !std::isfinite(draw)) throw NumericError("lambda_i draw underflowed or overflowed");
  return draw;
}

namespace {

RvmDraws rvm_chain(const RvmConfig& config, const DesignMatrix& K, const Eigen::VectorXd& y,
                   const RvmBetaConditional& conditional, Rng& rng) {
  const auto dim = K.columns();
  RvmDraws out;
  out.config = config;
  out.kernel = K.spec();
  out.beta.resize(config.M, dim);
  out.lambdas.resize(config.M, dim);
  out.inv_sigma2.resize(config.M);

  Eigen::VectorXd lambdas = config.initial_lambdas(dim);
  double inv_sigma2 = config.init_inv_sigma2;
  Eigen::VectorXd beta = conditional.draw(lambdas, inv_sigma2, rng);

  const Eigen::Index total = config.burn_in + config.M;
  for (Eigen::Index it = 0; it < total; ++it) {
    inv_sigma2 = rvm_sample_inv_sigma2(K, y, beta, config.c, config.d, rng);
    for (Eigen::Index i = 0; i < dim; ++i) {
      lambdas[i] = rvm_sample_lambda_i(beta[i], config.a, config.b, rng);
    }
    beta = conditional.draw(lambdas, inv_sigma2, rng);
    if (!beta.allFinite()) throw NumericError("non-finite beta draw");
    if (it >= config.burn_in) {
      const auto row = it - config.burn_in;
      out.beta.row(row) = beta.transpose();
      out.lambdas.row(row) = lambdas.transpose();
      out.inv_sigma2[row] = inv_sigma2;
    }
  }
  return out;
}

}  // namespace

RvmDraws rvm_run_gibbs(const RvmConfig& config, const DesignMatrix& K, const Eigen::VectorXd& y) {
  config.validate(K.n());
  RvmBetaConditional conditional(K, y);
  Rng rng(config.seed);
  return rvm_chain(config, K, y, conditional, rng);
}

std::vector<RvmDraws> rvm_run_gibbs_chains(const RvmConfig& config, const DesignMatrix& K,
                                           const Eigen::VectorXd& y, int chains, unsigned threads) {
  if (chains < 1) throw UsageError("chain count must be at least 1");
  config.validate(K.n());
  RvmBetaConditional conditional(K, y);
  std::vector<RvmDraws> out(static_cast<std::size_t>(chains));
  parallel_for(out.size(), threads, [&](std::size_t c) {
    RvmConfig chain_config = config;
    if (chains > 1) {
      const double scale = std::pow(10.0, static_cast<double>(c) - 0.5 * (chains - 1));
      chain_config.init_lambda = config.init_lambda * scale;
      chain_config.init_inv_sigma2 = config.init_inv_sigma2 / scale;
    }
    Rng rng = chains > 1 ? Rng::derive(config.seed, {static_cast<std::uint64_t>(c)}) : Rng(config.seed);
    out[c] = rvm_chain(chain_config, K, y, conditional, rng);
  });
  return out;
}

}  // namespace sprvm
