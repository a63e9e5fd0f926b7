#include "sprvm/marglik.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "sprvm/error.hpp"
#include "sprvm/linalg.hpp"
#include "sprvm/parallel.hpp"

namespace sprvm {

std::string to_string(MarglikStatus s) {
  switch (s) {
    case MarglikStatus::kFinite: return "finite";
    case MarglikStatus::kDivergent: return "divergent";
    case MarglikStatus::kNonConvergent: return "non-convergent";
  }
  return "unknown";
}

namespace {

void check_positive(double lambda, double xi) {
  if (!(lambda > 0.0) || !(xi > 0.0) || !std::isfinite(lambda) || !std::isfinite(xi)) {
    throw UsageError("marginal density needs positive finite lambda and xi");
  }
}

}  // namespace

double log_density_y_given_lambda(double lambda, double xi, const DesignMatrix& design,
                                  const Eigen::VectorXd& y) {
  check_positive(lambda, xi);
  const auto& K = design.K();
  const auto n = design.n();
  if (y.size() != n) throw UsageError("response length does not match design rows");
  const double dn = static_cast<double>(n);

  Eigen::MatrixXd inner = K.transpose() * K;
  inner.diagonal().array() += lambda / xi;
  auto inner_factor = factor_spd(inner, "marginal density determinant");
  const double logdet = 2.0 * inner_factor.matrixLLT().diagonal().array().log().sum();

  Eigen::MatrixXd cov = (K * K.transpose()) / lambda;
  cov.diagonal().array() += 1.0 / xi;
  auto cov_factor = factor_spd(cov, "marginal density quadratic form");
  const double quad = y.dot(cov_factor.solve(y));

  return -0.5 * std::log(xi) - 0.5 * dn * std::log(2.0 * std::numbers::pi) +
         0.5 * (dn + 1.0) * std::log(lambda) - 0.5 * logdet - 0.5 * quad;
}

CollapsedLikelihood::CollapsedLikelihood(const DesignMatrix& K, const Eigen::VectorXd& y) {
  if (y.size() != K.n()) throw UsageError("response length does not match design rows");
  const auto spectral = spectral_gram(K.K() * K.K().transpose());
  eigenvalues_ = spectral.values;
  projected_ = spectral.vectors.transpose() * y;
}

double CollapsedLikelihood::log_density(double lambda, double xi) const {
  check_positive(lambda, xi);
  const double dn = static_cast<double>(n());
  const double ratio = lambda / xi;
  // log|K'K + ratio I| = sum_i log(phi_i + ratio) + log(ratio)
  const double logdet = (eigenvalues_.array() + ratio).log().sum() + std::log(ratio);
  const double quad =
      (projected_.array().square() / (1.0 / xi + eigenvalues_.array() / lambda)).sum();
  return -0.5 * std::log(xi) - 0.5 * dn * std::log(2.0 * std::numbers::pi) +
         0.5 * (dn + 1.0) * std::log(lambda) - 0.5 * logdet - 0.5 * quad;
}

double CollapsedLikelihood::log_integrand(double u, double xi, const PenaltyPrior& prior) const {
  const double lambda = std::exp(u);
  double value = log_density(lambda, xi) + prior.a * u;
  if (prior.b != 0.0) value -= prior.b * lambda;
  return value;
}

MarglikValue log_marginal_likelihood(double xi, const DesignMatrix& K, const Eigen::VectorXd& y,
                                     const PenaltyPrior& prior) {
  return log_marginal_likelihood(xi, CollapsedLikelihood(K, y), prior);
}

MarglikValue log_marginal_likelihood(double xi, const CollapsedLikelihood& likelihood,
                                     const PenaltyPrior& prior) {
  if (!(xi > 0.0) || !std::isfinite(xi)) throw UsageError("xi must be positive");
  if (!std::isfinite(prior.a) || !std::isfinite(prior.b) || prior.b < 0.0) {
    throw UsageError("prior (a, b) must be finite with b >= 0");
  }
  constexpr double kCap = 80.0;
  constexpr double kStableTol = 1e-8;
  constexpr double kErrorTol = 1e-6;

  // Scale by the largest integrand value seen on a coarse grid so the panels
  // integrate numbers of order one.
  double peak = -std::numeric_limits<double>::infinity();
  for (double u = -kCap; u <= kCap; u += 0.125) {
    peak = std::max(peak, likelihood.log_integrand(u, xi, prior));
  }
  if (!std::isfinite(peak)) {
    MarglikValue v;
    v.status = MarglikStatus::kNonConvergent;
    return v;
  }

  auto integrand = [&](double u) {
    const double h = likelihood.log_integrand(u, xi, prior) - peak;
    return h < -745.0 ? 0.0 : std::exp(h);
  };
  double total_error = 0.0;
  auto panel_sum = [&](double lo, double hi) {
    double sum = 0.0;
    for (double start = lo; start < hi; start += 1.0) {
      double err = 0.0;
      sum += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
          integrand, start, std::min(start + 1.0, hi), 15, 1e-12, &err);
      total_error += err;
    }
    return sum;
  };

  double integral = panel_sum(-40.0, 40.0);
  double change = 0.0;
  bool stable = false;
  for (double half = 60.0; half <= kCap; half += 20.0) {
    const double added = panel_sum(-half, -half + 20.0) + panel_sum(half - 20.0, half);
    const double next = integral + added;
    change = next > 0.0 ? added / next : std::numeric_limits<double>::infinity();
    integral = next;
    if (change <= kStableTol) {
      stable = true;
      break;
    }
  }

  MarglikValue v;
  v.relative_change = change;
  v.relative_error = integral > 0.0 ? total_error / integral : std::numeric_limits<double>::infinity();
  if (!stable) {
    v.status = MarglikStatus::kDivergent;
  } else if (!(integral > 0.0) || v.relative_error > kErrorTol) {
    v.status = MarglikStatus::kNonConvergent;
  } else {
    v.status = MarglikStatus::kFinite;
    v.log_value = peak + std::log(integral);
  }
  return v;
}

MarglikGrid optimize_marglik(const std::vector<double>& theta_grid,
                             const std::vector<double>& xi_grid, const Eigen::MatrixXd& X,
                             const Eigen::VectorXd& y, KernelFamily family,
                             const PenaltyPrior& prior, unsigned threads) {
  if (theta_grid.empty() || xi_grid.empty()) throw UsageError("marginal likelihood grids must be non-empty");
  for (double t : theta_grid) {
    if (!(t > 0.0)) throw UsageError("theta grid values must be positive");
  }
  for (double x : xi_grid) {
    if (!(x > 0.0)) throw UsageError("xi grid values must be positive");
  }
  MarglikGrid grid;
  grid.theta_values = theta_grid;
  grid.xi_values = xi_grid;
  const auto T = static_cast<Eigen::Index>(theta_grid.size());
  const auto S = static_cast<Eigen::Index>(xi_grid.size());
  grid.log_ml = Eigen::MatrixXd::Constant(T, S, std::numeric_limits<double>::quiet_NaN());
  grid.status.assign(theta_grid.size(), std::vector<MarglikStatus>(xi_grid.size()));

  auto rows = std::make_shared<const Eigen::MatrixXd>(X);
  parallel_for(theta_grid.size(), threads, [&](std::size_t t) {
    const auto design = build_design(KernelSpec{family, theta_grid[t]}, rows);
    const CollapsedLikelihood likelihood(design, y);
    for (std::size_t s = 0; s < xi_grid.size(); ++s) {
      const auto value = log_marginal_likelihood(xi_grid[s], likelihood, prior);
      grid.status[t][s] = value.status;
      if (value.finite()) {
        grid.log_ml(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(s)) = value.log_value;
      }
    }
  });

  bool found = false;
  for (std::size_t t = 0; t < theta_grid.size(); ++t) {
    for (std::size_t s = 0; s < xi_grid.size(); ++s) {
      if (grid.status[t][s] != MarglikStatus::kFinite) {
        ++grid.excluded;
        continue;
      }
      const double v = grid.log_ml(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(s));
      const double th = theta_grid[t], x = xi_grid[s];
      const bool better =
          !found || v > grid.best_log_ml ||
          (v == grid.best_log_ml && (th < grid.theta_hat || (th == grid.theta_hat && x < grid.xi_hat)));
      if (better) {
        found = true;
        grid.best_log_ml = v;
        grid.theta_hat = th;
        grid.xi_hat = x;
      }
    }
  }
  if (!found) {
    throw NumericError("marginal likelihood is divergent or non-convergent at every grid cell; "
                       "consider a different prior (a, b)");
  }
  return grid;
}

}  // namespace sprvm
