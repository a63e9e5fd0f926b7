#include <doctest.h>

#include "oracles.hpp"
#include "sprvm/data.hpp"
#include "sprvm/error.hpp"
#include "sprvm/predict.hpp"

using namespace sprvm;

namespace {

SprvmDraws fake_draws(const Eigen::MatrixXd& beta) {
  SprvmDraws d;
  d.beta = beta;
  d.lambda = Eigen::VectorXd::Ones(beta.rows());
  return d;
}

}  // namespace

TEST_CASE("posterior mean examples") {
  Eigen::MatrixXd one(1, 3);
  one << 0.5, -1.0, 2.0;
  CHECK(posterior_mean_beta(one) == one.row(0).transpose());

  Eigen::MatrixXd alt(6, 2);
  for (int i = 0; i < 6; ++i) alt.row(i) << (i % 2 == 0 ? 1.0 : 0.0), (i % 2 == 0 ? 0.0 : 1.0);
  CHECK(posterior_mean_beta(alt) == Eigen::Vector2d(0.5, 0.5));
  CHECK_THROWS_AS(posterior_mean_beta(Eigen::MatrixXd(0, 3)), UsageError);
}

TEST_CASE("posterior mean at frozen lambda converges to the conditional mean") {
  const Dataset d = standardize_response(make_synthetic(6, 2, 0.2, 1));
  const DesignMatrix D = build_design({KernelFamily::kGaussian, 1.0}, d.X);
  const BetaConditional c(D, d.y);
  Rng rng(2);
  const Eigen::Index M = 20000;
  Eigen::MatrixXd draws(M, c.dim());
  for (Eigen::Index i = 0; i < M; ++i) draws.row(i) = c.draw(0.3, 5.0, rng).transpose();
  const Eigen::VectorXd mean = posterior_mean_beta(draws);
  const auto sigma = batch_means_cov(draws);
  Eigen::MatrixXd A = D.K().transpose() * D.K();
  A.diagonal().array() += 0.3 / 5.0;
  const Eigen::VectorXd truth = A.inverse() * (D.K().transpose() * d.y);
  for (Eigen::Index j = 0; j < c.dim(); ++j) {
    const double mcse = std::sqrt(sigma.sigma_hat(j, j) / static_cast<double>(M));
    CHECK(std::abs(mean(j) - truth(j)) < 4.0 * mcse);
  }
}

TEST_CASE("predictions: zero draws give the response mean") {
  Eigen::MatrixXd X(3, 1);
  X << 0, 1, 2;
  const SprvmDraws draws = fake_draws(Eigen::MatrixXd::Zero(200, 4));
  const Standardization st{7.5, 2.0};
  const auto r = predict_point(draws, {KernelFamily::kGaussian, 1.0}, X, Eigen::VectorXd::Constant(1, 0.4), st);
  CHECK(r.point_standardized == 0.0);
  CHECK(r.point == 7.5);
  REQUIRE(r.mcse);
  CHECK(*r.mcse == 0.0);
  CHECK(r.method == Method::kSprvm);
  CHECK(r.m_used == 200);
}

TEST_CASE("predictions: linear in the prediction row; MCSE is sd times the standardized one") {
  Rng rng(3);
  Eigen::MatrixXd beta(400, 4);
  for (Eigen::Index i = 0; i < 400; ++i) beta.row(i) = rng.normal_vector(4).transpose();
  const auto summary = summarize(fake_draws(beta));
  const Eigen::VectorXd u = rng.normal_vector(4), v = rng.normal_vector(4);
  const double alpha = 1.7, gamma = -0.4;
  const auto pu = predict_from_row(summary, u, std::nullopt);
  const auto pv = predict_from_row(summary, v, std::nullopt);
  const auto pw = predict_from_row(summary, alpha * u + gamma * v, std::nullopt);
  CHECK(pw.point_standardized == doctest::Approx(alpha * pu.point_standardized + gamma * pv.point_standardized));

  const Standardization st{-2.0, 3.0};
  const auto raw = predict_from_row(summary, u, st);
  CHECK(raw.point == st.inverse(raw.point_standardized));
  CHECK(raw.point == doctest::Approx(pu.point_standardized * 3.0 - 2.0).epsilon(1e-15));
  CHECK(*raw.mcse == doctest::Approx(3.0 * *raw.mcse_standardized).epsilon(1e-15));
  CHECK(*raw.mcse_standardized == doctest::Approx(prediction_mcse(*summary.sigma, u)).epsilon(1e-15));
  CHECK(*raw.mcse >= 0.0);
  CHECK_THROWS_AS(predict_from_row(summary, Eigen::VectorXd::Ones(3), st), UsageError);
}

TEST_CASE("predictions: RVM never carries an MCSE") {
  RvmDraws draws;
  draws.beta = Eigen::MatrixXd::Ones(50, 3);
  draws.lambdas = Eigen::MatrixXd::Ones(50, 3);
  draws.inv_sigma2 = Eigen::VectorXd::Ones(50);
  const auto summary = summarize(draws);
  CHECK_FALSE(summary.sigma.has_value());
  const auto r = predict_from_row(summary, Eigen::VectorXd::Ones(3), std::nullopt);
  CHECK(r.method == Method::kRvm);
  CHECK_FALSE(r.mcse.has_value());
  CHECK_FALSE(r.mcse_standardized.has_value());
  CHECK(r.point == 3.0);
  CHECK(to_string(Method::kRvm) == "rvm");
  CHECK(parse_method("sprvm") == Method::kSprvm);
  CHECK_THROWS_AS(parse_method("gp"), UsageError);
}

TEST_CASE("predictions: batch reuses one covariance estimate and matches single points") {
  const Dataset raw = make_synthetic(12, 2, 0.1, 4);
  const Dataset d = standardize_response(raw);
  const KernelSpec spec{KernelFamily::kGaussian, 1.0};
  const DesignMatrix D = build_design(spec, d.X);
  SprvmConfig config;
  config.xi = 10.0;
  config.M = 2000;
  config.burn_in = 500;
  const SprvmDraws draws = run_gibbs(config, D, d.y);
  const auto summary = summarize(draws);
  const Eigen::MatrixXd X_new = make_synthetic(4, 2, 0.0, 5).X;
  const auto batch = predict_batch(summary, spec, d.X, X_new, d.standardization);
  REQUIRE(batch.size() == 4);
  for (Eigen::Index i = 0; i < 4; ++i) {
    const auto single = predict_point(draws, spec, d.X, X_new.row(i).transpose(), d.standardization);
    CHECK(batch[static_cast<std::size_t>(i)].point == doctest::Approx(single.point).epsilon(1e-14));
    CHECK(*batch[static_cast<std::size_t>(i)].mcse == doctest::Approx(*single.mcse).epsilon(1e-14));
  }
}

TEST_CASE("predictions: spectral covariance option and pooled chains") {
  const Dataset d = standardize_response(make_synthetic(8, 2, 0.1, 6));
  const DesignMatrix D = build_design({KernelFamily::kGaussian, 1.0}, d.X);
  SprvmConfig config;
  config.xi = 10.0;
  config.M = 1000;
  config.burn_in = 200;
  const auto chains = run_gibbs_chains(config, D, d.y, 3, 1);
  const auto pooled = summarize(chains);
  CHECK(pooled.m_used == 3000);
  REQUIRE(pooled.sigma);
  CHECK(pooled.sigma->M == 3000);
  Eigen::VectorXd all_mean = Eigen::VectorXd::Zero(9);
  for (const auto& c : chains) all_mean += c.beta.colwise().sum().transpose();
  all_mean /= 3000.0;
  CHECK((pooled.beta_mean - all_mean).norm() < 1e-12);
  const auto spectral = summarize(chains[0], CovarianceMethod::kSpectral);
  CHECK(spectral.sigma->method == CovarianceMethod::kSpectral);
}

TEST_CASE("predictions: a noiseless fit nearly interpolates its training points") {
  const Dataset raw = make_synthetic(20, 2, 0.0, 7);
  const Dataset d = standardize_response(raw);
  const KernelSpec spec{KernelFamily::kGaussian, 1.5};
  const DesignMatrix D = build_design(spec, d.X);
  SprvmConfig config;
  config.xi = 1000.0;
  config.M = 5000;
  config.burn_in = 2000;
  const SprvmDraws draws = run_gibbs(config, D, d.y);
  for (Eigen::Index i : {0, 7, 13}) {
    const auto r = predict_point(draws, spec, d.X, d.X.row(i).transpose(), d.standardization);
    CHECK(std::abs(r.point_standardized - d.y(i)) < 0.1);
  }
}
