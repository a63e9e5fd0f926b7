#include "sprvm/sprvm.hpp"

#include <cmath>
#include <sstream>

#include "sprvm/error.hpp"
#include "sprvm/parallel.hpp"

namespace sprvm {

void SprvmConfig::validate() const {
  if (M < 1) throw UsageError("retained draw count M must be at least 1");
  if (burn_in < 0) throw UsageError("burn-in must be non-negative");
  if (!(xi > 0.0) || !std::isfinite(xi)) throw UsageError("noise precision xi must be positive");
  if (!(init_lambda > 0.0) || !std::isfinite(init_lambda)) {
    throw UsageError("initial lambda must be positive");
  }
  if (!std::isfinite(a) || !std::isfinite(b)) throw UsageError("prior (a, b) must be finite");
  if (b < 0.0) throw UsageError("prior rate b must be non-negative");
}

std::string to_string(Tristate t) {
  switch (t) {
    case Tristate::kHolds: return "holds";
    case Tristate::kFails: return "fails";
    case Tristate::kNotApplicable: return "not-applicable";
  }
  return "unknown";
}

BetaConditional::BetaConditional(const DesignMatrix& K, const Eigen::VectorXd& y) {
  if (y.size() != K.n()) throw UsageError("response length does not match design rows");
  gram_ = spectral_gram(K.K().transpose() * K.K());
  projected_ = gram_.vectors.transpose() * (K.K().transpose() * y);
}

void BetaConditional::check(double lambda, double xi) const {
  if (!(lambda > 0.0) || !std::isfinite(lambda) || !(xi > 0.0) || !std::isfinite(xi)) {
    std::ostringstream msg;
    msg << "beta conditional needs positive finite lambda and xi (lambda = " << lambda
        << ", xi = " << xi << ")";
    throw NumericError(msg.str());
  }
}

Eigen::VectorXd BetaConditional::mean(double lambda, double xi) const {
  check(lambda, xi);
  Eigen::ArrayXd d = xi * gram_.values.array() + lambda;
  return gram_.vectors * (xi * projected_.array() / d).matrix();
}

Eigen::MatrixXd BetaConditional::covariance(double lambda, double xi) const {
  check(lambda, xi);
  Eigen::VectorXd inv_d = (xi * gram_.values.array() + lambda).inverse();
  return gram_.vectors * inv_d.asDiagonal() * gram_.vectors.transpose();
}

double BetaConditional::expected_squared_norm(double lambda, double xi) const {
  check(lambda, xi);
  Eigen::ArrayXd d = xi * gram_.values.array() + lambda;
  return (xi * projected_.array() / d).square().sum() + d.inverse().sum();
}

Eigen::VectorXd BetaConditional::draw(double lambda, double xi, Rng& rng) const {
  check(lambda, xi);
  Eigen::ArrayXd d = xi * gram_.values.array() + lambda;
  Eigen::VectorXd z = rng.normal_vector(dim());
  Eigen::VectorXd coords = (xi * projected_.array() / d + z.array() / d.sqrt()).matrix();
  return gram_.vectors * coords;
}

Eigen::VectorXd sample_beta_given_lambda(const DesignMatrix& K, const Eigen::VectorXd& y,
                                         double lambda, double xi, Rng& rng) {
  return BetaConditional(K, y).draw(lambda, xi, rng);
}

double sample_lambda_given_beta(const Eigen::VectorXd& beta, double a, double b, Rng& rng) {
  const double shape = 0.5 * static_cast<double>(beta.size()) + a;
  const double rate = 0.5 * beta.squaredNorm() + b;
  if (!(shape > 0.0) || !(rate > 0.0) || !std::isfinite(rate)) {
    std::ostringstream msg;
    msg << "lambda conditional has non-positive parameters (shape = " << shape
        << ", rate = " << rate << ")";
    throw NumericError(msg.str());
  }
  const double draw = rng.gamma(shape, rate);
  if (!(draw > 0.0) || !std::isfinite(draw)) {
    throw NumericError("lambda draw underflowed or overflowed");
  }
  return draw;
}

namespace {

// Largest s on {0.01, ..., 1.00} with Gamma(x - s) / Gamma(x) < 2^s, x = (n+1)/2 + a.
std::optional<double> search_condition_ii(double x) {
  auto feasible = [x](double s) {
    if (x - s <= 0.0) return false;
    return std::lgamma(x - s) - std::lgamma(x) < s * std::log(2.0);
  };
  if (feasible(1.0)) return 1.0;
  for (int k = 99; k >= 1; --k) {
    const double s = k / 100.0;
    if (feasible(s)) return s;
  }
  return std::nullopt;
}

Eigen::Index numeric_rank(const DesignMatrix& K) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(K.K());
  const auto& sv = svd.singularValues();
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv[i] > 1e-10 * sv[0]) ++r;
  }
  return r;
}

}  // namespace

ProprietyReport check_propriety(double a, double b, Eigen::Index n, const DesignMatrix& K) {
  if (!std::isfinite(a) || !std::isfinite(b) || b < 0.0) {
    throw UsageError("prior (a, b) must be finite with b >= 0");
  }
  if (n != K.n()) throw UsageError("n does not match the design matrix");
  ProprietyReport r;
  std::ostringstream notes;
  const double half = 0.5 * static_cast<double>(n + 1);

  if (b == 0.0) {
    r.necessary_ok = (a > -half && a < 0.0) ? Tristate::kHolds : Tristate::kFails;
  }
  r.condition_i = b > 0.0 || (a < 0.0 && b == 0.0);

  r.condition_ii_s = search_condition_ii(half + a);
  if (!r.condition_ii_s) {
    notes << "condition (ii) fails for every s in (0, 1]";
    if (half + a <= 0.01) notes << " (Gamma pole: (n+1)/2 + a - s <= 0)";
    notes << ". ";
  }

  const auto c3 = check_condition_iii(K);
  r.condition_iii = c3.holds;
  if (!c3.holds) {
    notes << "kernel matrix violates the ratio condition at " << c3.violations.size()
          << " (i, j) pairs. ";
  }

  const Eigen::Index rank = numeric_rank(K);
  r.full_row_rank = rank == n;
  if (r.condition_iii && !r.full_row_rank) {
    notes << "kernel matrix satisfies the ratio condition but has numeric rank " << rank
          << " < n. ";
  }
  if (b == 0.0 && r.necessary_ok == Tristate::kHolds &&
      a <= -0.5 * static_cast<double>(rank)) {
    notes << "with b = 0 the marginal likelihood diverges at lambda -> 0 unless a > -rank(K)/2 = "
          << -0.5 * static_cast<double>(rank) << ". ";
  }

  r.sufficient_ok = r.condition_i && r.condition_ii() && r.condition_iii;
  r.notes = notes.str();
  if (!r.notes.empty() && r.notes.back() == ' ') r.notes.pop_back();
  return r;
}

namespace {

void refuse_if_improper(const SprvmConfig& config, const DesignMatrix& K,
                        std::vector<std::string>& warnings) {
  const auto report = check_propriety(config.a, config.b, K.n(), K);
  if (report.necessary_ok == Tristate::kFails) {
    std::ostringstream msg;
    msg << "prior (a = " << config.a << ", b = " << config.b
        << ") gives an improper posterior: with b = 0, a must lie in (-(n+1)/2, 0) = ("
        << -0.5 * static_cast<double>(K.n() + 1) << ", 0)";
    throw ImproprietyError(msg.str());
  }
  if (config.b == 0.0 && config.a <= -0.5 * static_cast<double>(numeric_rank(K))) {
    std::ostringstream msg;
    msg << "prior (a = " << config.a << ", b = 0) gives an improper posterior: the marginal "
        << "likelihood diverges at lambda -> 0 for a <= -rank(K)/2";
    throw ImproprietyError(msg.str());
  }
  if (!report.sufficient_ok) {
    warnings.push_back("sufficient conditions for geometric ergodicity do not hold: " + report.notes);
  }
}

SprvmDraws gibbs_chain(const SprvmConfig& config, const DesignMatrix& K,
                       const BetaConditional& conditional, Rng& rng) {
  const auto dim = K.columns();
  SprvmDraws out;
  out.config = config;
  out.kernel = K.spec();
  out.beta.resize(config.M, dim);
  out.lambda.resize(config.M);

  double lambda = config.init_lambda;
  const Eigen::Index total = config.burn_in + config.M;
  for (Eigen::Index it = 0; it < total; ++it) {
    Eigen::VectorXd beta = conditional.draw(lambda, config.xi, rng);
    if (!beta.allFinite()) throw NumericError("non-finite beta draw");
    lambda = sample_lambda_given_beta(beta, config.a, config.b, rng);
    if (it >= config.burn_in) {
      const auto row = it - config.burn_in;
      out.beta.row(row) = beta.transpose();
      out.lambda[row] = lambda;
    }
  }
  return out;
}

}  // namespace

SprvmDraws run_gibbs(const SprvmConfig& config, const DesignMatrix& K, const Eigen::VectorXd& y) {
  config.validate();
  std::vector<std::string> warnings;
  refuse_if_improper(config, K, warnings);
  BetaConditional conditional(K, y);
  Rng rng(config.seed);
  SprvmDraws out = gibbs_chain(config, K, conditional, rng);
  out.warnings = std::move(warnings);
  return out;
}

std::vector<SprvmDraws> run_gibbs_chains(const SprvmConfig& config, const DesignMatrix& K,
                                         const Eigen::VectorXd& y, int chains, unsigned threads) {
  if (chains < 1) throw UsageError("chain count must be at least 1");
  config.validate();
  std::vector<std::string> warnings;
  refuse_if_improper(config, K, warnings);
  BetaConditional conditional(K, y);
  std::vector<SprvmDraws> out(static_cast<std::size_t>(chains));
  parallel_for(out.size(), threads, [&](std::size_t c) {
    SprvmConfig chain_config = config;
    if (chains > 1) {
      chain_config.init_lambda =
          config.init_lambda * std::pow(10.0, static_cast<double>(c) - 0.5 * (chains - 1));
    }
    Rng rng = chains > 1 ? Rng::derive(config.seed, {static_cast<std::uint64_t>(c)}) : Rng(config.seed);
    out[c] = gibbs_chain(chain_config, K, conditional, rng);
    out[c].warnings = warnings;
  });
  return out;
}

double drift_function(double lambda, double m, double s) {
  return std::pow(lambda, m) + std::pow(lambda, -s);
}

DriftReport drift_check(const SprvmConfig& config, const DesignMatrix& K, const Eigen::VectorXd& y,
                        const Eigen::VectorXd& lambda_grid, double m, double s, Eigen::Index reps) {
  config.validate();
  if (!(m > 0.0 && m < 1.0)) throw UsageError("drift exponent m must lie in (0, 1)");
  if (!(s > 0.0 && s <= 1.0)) throw UsageError("drift exponent s must lie in (0, 1]");
  if (config.b == 0.0 && !(m < -config.a)) {
    throw UsageError("with b = 0 the drift exponent m must be below -a");
  }
  if (lambda_grid.size() < 2) throw UsageError("drift check needs at least two grid points to fit a slope");
  if ((lambda_grid.array() <= 0.0).any()) throw UsageError("drift grid values must be positive");
  if (reps < 2) throw UsageError("drift check needs at least two replicates per grid point");

  const double shape = 0.5 * static_cast<double>(K.n() + 1) + config.a;
  if (!(shape > s)) throw UsageError("E[lambda^-s] is infinite: (n+1)/2 + a must exceed s");
  // Gamma moments: E[l^m] = G(shape+m)/G(shape) r^-m and E[l^-s] = G(shape-s)/G(shape) r^s.
  const double up = std::exp(std::lgamma(shape + m) - std::lgamma(shape));
  const double down = std::exp(std::lgamma(shape - s) - std::lgamma(shape));

  BetaConditional conditional(K, y);
  const auto G = lambda_grid.size();
  DriftReport rep;
  rep.grid = lambda_grid;
  rep.v.resize(G);
  rep.expected.resize(G);
  rep.std_error.resize(G);
  for (Eigen::Index g = 0; g < G; ++g) {
    Rng rng = Rng::derive(config.seed, {static_cast<std::uint64_t>(g)});
    const double lambda = lambda_grid[g];
    // One scan per replicate: beta | lambda is drawn, and the lambda' | beta
    // step is integrated exactly through the Gamma moments.
    double sum = 0.0, sumsq = 0.0;
    for (Eigen::Index r = 0; r < reps; ++r) {
      const Eigen::VectorXd beta = conditional.draw(lambda, config.xi, rng);
      const double rate = 0.5 * beta.squaredNorm() + config.b;
      const double value = up * std::pow(rate, -m) + down * std::pow(rate, s);
      sum += value;
      sumsq += value * value;
    }
    const double n = static_cast<double>(reps);
    const double mean = sum / n;
    const double var = std::max(0.0, (sumsq - n * mean * mean) / (n - 1.0));
    rep.v[g] = drift_function(lambda, m, s);
    rep.expected[g] = mean;
    rep.std_error[g] = std::sqrt(var / n);
  }

  const double vbar = rep.v.mean();
  const double ebar = rep.expected.mean();
  const double sxx = (rep.v.array() - vbar).square().sum();
  if (!(sxx > 0.0)) throw UsageError("drift grid gives constant v; cannot fit a slope");
  rep.rho_hat = ((rep.v.array() - vbar) * (rep.expected.array() - ebar)).sum() / sxx;
  rep.intercept_hat = ebar - rep.rho_hat * vbar;
  rep.envelope_L = (rep.expected - rep.rho_hat * rep.v).maxCoeff();

  auto tail_ok = [&rep](Eigen::Index g) {
    return rep.expected[g] - 4.0 * rep.std_error[g] < rep.v[g];
  };
  Eigen::Index lo = 0, hi = 0;
  lambda_grid.minCoeff(&lo);
  lambda_grid.maxCoeff(&hi);
  rep.linear_fit_ok = rep.rho_hat < 1.0 && tail_ok(lo) && tail_ok(hi);
  return rep;
}

}  // namespace sprvm
