#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "sprvm/diagnostics.hpp"
#include "sprvm/error.hpp"
#include "sprvm/random.hpp"

using namespace sprvm;

namespace {

Eigen::MatrixXd iid_normal(Eigen::Index rows, Eigen::Index cols, double mean, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = mean + rng.normal();
  }
  return m;
}

Eigen::MatrixXd ar1(Eigen::Index M, double phi, Rng& rng) {
  Eigen::MatrixXd x(M, 1);
  double v = rng.normal() / std::sqrt(1.0 - phi * phi);  // stationary start
  for (Eigen::Index t = 0; t < M; ++t) {
    v = phi * v + rng.normal();
    x(t, 0) = v;
  }
  return x;
}

BatchMeansCov fixed_sigma(const Eigen::MatrixXd& sigma, Eigen::Index M) {
  BatchMeansCov c;
  c.sigma_hat = sigma;
  c.M = M;
  return c;
}

}  // namespace

TEST_CASE("PSRF: i.i.d. chains sit near one") {
  Rng rng(1);
  std::vector<Eigen::MatrixXd> chains;
  for (int c = 0; c < 4; ++c) chains.push_back(iid_normal(5000, 3, 0.0, rng));
  const auto r = psrf(chains, {"a", "b", "c"});
  CHECK(r.max_psrf < 1.01);
  CHECK(r.chains == 4);
  CHECK(r.draws_per_chain == 5000);
  CHECK(r.names[1] == "b");
  for (Eigen::Index p = 0; p < 3; ++p) CHECK(r.per_parameter(p) >= 1.0 - 1e-6 - 1e-3);
}

TEST_CASE("PSRF: separated chains are flagged") {
  Rng rng(2);
  const auto r = psrf({iid_normal(5000, 1, 0.0, rng), iid_normal(5000, 1, 5.0, rng)});
  CHECK(r.max_psrf > 2.0);
  CHECK(r.names[0] == "param0");
}

TEST_CASE("PSRF: hand-checked two-chain value") {
  // chain 1: 0,2,0,2,... chain 2: 1,3,1,3,... (n = 10)
  Eigen::MatrixXd a(10, 1), b(10, 1);
  for (int i = 0; i < 10; ++i) {
    a(i, 0) = (i % 2) * 2.0;
    b(i, 0) = 1.0 + (i % 2) * 2.0;
  }
  // W = 10/9, B = n * var(chain means) = 10 * 0.5 = 5
  const double W = 10.0 / 9.0, B = 5.0, n = 10.0, m = 2.0;
  const double V = (n - 1) / n * W + (m + 1) / (m * n) * B;
  CHECK(psrf({a, b}).max_psrf == doctest::Approx(std::sqrt(V / W)).epsilon(1e-12));
}

TEST_CASE("PSRF: degenerate and malformed input") {
  const Eigen::MatrixXd same = Eigen::MatrixXd::Constant(20, 1, 3.0);
  CHECK_THROWS_AS(psrf({same, same}), NumericError);
  Rng rng(3);
  const Eigen::MatrixXd x = iid_normal(20, 2, 0.0, rng);
  CHECK_THROWS_AS(psrf({x}), UsageError);
  CHECK_THROWS_AS(psrf({x, iid_normal(21, 2, 0.0, rng)}), UsageError);
  CHECK_THROWS_AS(psrf({x, iid_normal(20, 3, 0.0, rng)}), UsageError);
  CHECK_THROWS_AS(psrf({x.topRows(9), x.bottomRows(9)}), UsageError);
  CHECK_THROWS_AS(psrf({x, x}, {"only one"}), UsageError);
}

TEST_CASE("PSRF is invariant to a common affine map") {
  Rng rng(4);
  std::vector<Eigen::MatrixXd> chains;
  for (int c = 0; c < 3; ++c) chains.push_back(iid_normal(200, 2, 0.3 * c, rng));
  const auto base = psrf(chains);
  for (auto& c : chains) c = (c.array() * -3.5 + 11.0).matrix();
  const auto moved = psrf(chains);
  CHECK((base.per_parameter - moved.per_parameter).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("batch means: i.i.d. draws recover the covariance") {
  Eigen::MatrixXd C(3, 3);
  C << 2.0, 0.5, -0.3, 0.5, 1.0, 0.2, -0.3, 0.2, 0.5;
  const Eigen::MatrixXd L = C.llt().matrixL();
  Rng rng(5);
  const Eigen::Index M = 100000;
  Eigen::MatrixXd draws(M, 3);
  for (Eigen::Index i = 0; i < M; ++i) draws.row(i) = (L * rng.normal_vector(3)).transpose();
  const auto est = batch_means_cov(draws);
  CHECK(est.batch_size == 316);
  CHECK(est.batch_count == 316);
  CHECK(est.M == M);
  CHECK((est.sigma_hat - C).norm() / C.norm() < 0.15);
  CHECK((est.sigma_hat - est.sigma_hat.transpose()).cwiseAbs().maxCoeff() <= 1e-10);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(est.sigma_hat);
  CHECK(eig.eigenvalues().minCoeff() >= -1e-8 * est.sigma_hat.trace());
}

TEST_CASE("batch means: AR(1) asymptotic variance") {
  // x_t = phi x_{t-1} + e_t with unit innovations: the long-run variance is
  // 1 / (1 - phi)^2 = 4 at phi = 0.5 (the marginal variance is 4/3).
  const double phi = 0.5;
  const double truth = 1.0 / ((1.0 - phi) * (1.0 - phi));
  Rng rng(6);
  const Eigen::MatrixXd x = ar1(100000, phi, rng);
  CHECK(std::abs(batch_means_cov(x).sigma_hat(0, 0) - truth) < 0.2 * truth);
}

TEST_CASE("batch means and spectral variance: AR(1) across seeds") {
  // Each estimate has a relative sd near 8% at this length, so single runs
  // are checked loosely and the average tightly.
  const double truth = 4.0;
  double bm_sum = 0.0, sv_sum = 0.0;
  for (std::uint64_t seed = 100; seed < 110; ++seed) {
    Rng rng(seed);
    const Eigen::MatrixXd x = ar1(100000, 0.5, rng);
    const double bm = batch_means_cov(x).sigma_hat(0, 0);
    const double sv = spectral_variance_cov(x).sigma_hat(0, 0);
    CHECK(std::abs(bm - truth) < 0.3 * truth);
    CHECK(std::abs(sv - truth) < 0.3 * truth);
    bm_sum += bm;
    sv_sum += sv;
  }
  CHECK(std::abs(bm_sum / 10.0 - truth) < 0.06 * truth);
  CHECK(std::abs(sv_sum / 10.0 - truth) < 0.06 * truth);
}

TEST_CASE("batch means: constant chain and short chain") {
  const auto z = batch_means_cov(Eigen::MatrixXd::Constant(400, 2, 1.5));
  CHECK(z.sigma_hat.isZero(1e-14));
  CHECK_THROWS_AS(batch_means_cov(Eigen::MatrixXd::Zero(99, 1)), UsageError);
  CHECK_THROWS_AS(spectral_variance_cov(Eigen::MatrixXd::Zero(99, 1)), UsageError);
}

TEST_CASE("batch means: trailing draws beyond the last full batch are dropped") {
  Rng rng(7);
  Eigen::MatrixXd x = iid_normal(110, 1, 0.0, rng);  // batch size 10, 11 batches
  const auto a = batch_means_cov(x);
  CHECK(a.batch_size == 10);
  CHECK(a.batch_count == 11);
  Eigen::MatrixXd y(120, 1);
  y << x, Eigen::MatrixXd::Constant(10, 1, 100.0);  // batch size 10, 12 batches
  CHECK(batch_means_cov(y).batch_count == 12);
  Eigen::MatrixXd z(119, 1);
  z << x, Eigen::MatrixXd::Constant(9, 1, 100.0);  // batch size 10, the 9 extra are dropped
  CHECK(batch_means_cov(z).sigma_hat(0, 0) == doctest::Approx(a.sigma_hat(0, 0)).epsilon(1e-12));
}

TEST_CASE("batch means on a shuffled correlated chain approaches the sample covariance") {
  Rng rng(8);
  Eigen::MatrixXd x = ar1(40000, 0.9, rng);
  const auto correlated = batch_means_cov(x);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(x.rows()));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng.engine());
  Eigen::MatrixXd shuffled(x.rows(), 1);
  for (Eigen::Index i = 0; i < x.rows(); ++i) shuffled(i, 0) = x(order[static_cast<std::size_t>(i)], 0);
  const auto whitened = batch_means_cov(shuffled);
  const double sample_var = (x.array() - x.mean()).square().sum() / (x.rows() - 1.0);
  CHECK(std::abs(whitened.sigma_hat(0, 0) - sample_var) < 0.2 * sample_var);
  CHECK(correlated.sigma_hat(0, 0) > 5.0 * whitened.sigma_hat(0, 0));
}

TEST_CASE("prediction MCSE examples and scaling") {
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(3, 3);
  Eigen::VectorXd e1 = Eigen::VectorXd::Zero(3);
  e1(0) = 1.0;
  CHECK(prediction_mcse(fixed_sigma(I, 10000), e1) == doctest::Approx(0.01).epsilon(1e-14));
  CHECK(prediction_mcse(fixed_sigma(Eigen::MatrixXd::Zero(3, 3), 10000), e1) == 0.0);
  const Eigen::VectorXd k = Eigen::VectorXd::LinSpaced(3, 0.2, 1.4);
  Eigen::MatrixXd S(3, 3);
  S << 2, 0.3, 0, 0.3, 1, 0.1, 0, 0.1, 0.7;
  CHECK(prediction_mcse(fixed_sigma(S, 40000), k) ==
        doctest::Approx(0.5 * prediction_mcse(fixed_sigma(S, 10000), k)).epsilon(1e-13));
  const double c = 2.5;
  for (double scale : {0.5, 2.0, 7.0}) {
    CHECK(prediction_mcse(fixed_sigma(c * I, 100), scale * k) ==
          doctest::Approx(scale * prediction_mcse(fixed_sigma(c * I, 100), k)).epsilon(1e-13));
  }
  CHECK(prediction_mcse(fixed_sigma(c * I, 100), k) == doctest::Approx(std::sqrt(c / 100.0) * k.norm()));
}

TEST_CASE("prediction MCSE rejects broken inputs") {
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(2, 2);
  CHECK_THROWS_AS(prediction_mcse(fixed_sigma(I, 10), Eigen::VectorXd::Ones(3)), UsageError);
  Eigen::MatrixXd slightly(2, 2);
  slightly << 1.0, 0.0, 0.0, -1e-14;
  Eigen::VectorXd e2(2);
  e2 << 0.0, 1.0;
  CHECK(prediction_mcse(fixed_sigma(slightly, 10), e2) == 0.0);
  Eigen::MatrixXd broken(2, 2);
  broken << 1.0, 0.0, 0.0, -0.5;
  CHECK_THROWS_AS(prediction_mcse(fixed_sigma(broken, 10), e2), NumericError);
}

TEST_CASE("pooling chains averages the covariance and sums the draw counts") {
  const auto a = fixed_sigma(Eigen::MatrixXd::Identity(2, 2), 100);
  const auto b = fixed_sigma(3.0 * Eigen::MatrixXd::Identity(2, 2), 100);
  const auto pooled = pool_chains({a, b});
  CHECK(pooled.M == 200);
  CHECK(pooled.sigma_hat(0, 0) == 2.0);
  CHECK_THROWS_AS(pool_chains({}), UsageError);
  CHECK(parse_covariance_method("spectral") == CovarianceMethod::kSpectral);
  CHECK(to_string(CovarianceMethod::kBatchMeans) == "batch-means");
  CHECK_THROWS_AS(parse_covariance_method("overlapping"), UsageError);
}
