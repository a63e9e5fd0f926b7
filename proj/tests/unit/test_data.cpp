#include <doctest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "sprvm/data.hpp"
#include "sprvm/error.hpp"
#include "temp_file.hpp"

using namespace sprvm;
using sprvm::testing::TempFile;

namespace {

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

Dataset with_y(std::initializer_list<double> values) {
  Dataset d;
  d.y = Eigen::Map<const Eigen::VectorXd>(values.begin(), static_cast<Eigen::Index>(values.size()));
  d.X = Eigen::MatrixXd::Zero(d.y.size(), 1);
  return d;
}

}  // namespace

TEST_CASE("load_csv echoes a small file") {
  TempFile f("y,x1\n1,0\n2,0\n3,0\n");
  const Dataset d = load_csv(f.path(), "y");
  CHECK(d.n() == 3);
  CHECK(d.p() == 1);
  CHECK(d.y(0) == 1.0);
  CHECK(d.y(2) == 3.0);
  CHECK(d.X.isZero());
  CHECK(d.names == std::vector<std::string>{"x1"});
  CHECK_FALSE(d.standardization.has_value());
}

TEST_CASE("load_csv keeps covariates in file order around the response") {
  TempFile f("a,resp,b\n1,10,2\n3,20,4\n");
  const Dataset d = load_csv(f.path(), "resp");
  CHECK(d.names == std::vector<std::string>{"a", "b"});
  CHECK(d.X(1, 0) == 3.0);
  CHECK(d.X(1, 1) == 4.0);
  CHECK(d.y(1) == 20.0);
}

TEST_CASE("load_csv names the row of a non-numeric cell") {
  TempFile f("y,x1\n1,0\nabc,0\n3,0\n");
  const std::string msg = message_of([&] { load_csv(f.path(), "y"); });
  CHECK(msg.find("row 2") != std::string::npos);
  CHECK(msg.find("'y'") != std::string::npos);
  CHECK_THROWS_AS(load_csv(f.path(), "y"), DataError);
}

TEST_CASE("load_csv rejects missing files, columns, ragged rows and empty cells") {
  CHECK_THROWS_AS(load_csv("/nonexistent/definitely/missing.csv", "y"), DataError);
  TempFile f("y,x1\n1,0\n");
  CHECK(message_of([&] { load_csv(f.path(), "octane"); }).find("octane") != std::string::npos);
  TempFile ragged("y,x1\n1,0\n2\n");
  CHECK(message_of([&] { load_csv(ragged.path(), "y"); }).find("row 2") != std::string::npos);
  TempFile missing("y,x1\n1,\n");
  CHECK_THROWS_AS(load_csv(missing.path(), "y"), DataError);
  TempFile inf("y,x1\n1,inf\n");
  CHECK_THROWS_AS(load_csv(inf.path(), "y"), DataError);
}

TEST_CASE("load_csv handles a wide spectroscopy-shaped file") {
  std::ostringstream csv;
  csv << "octane";
  for (int j = 0; j < 401; ++j) csv << ",nir" << j;
  csv << "\n";
  for (int i = 0; i < 60; ++i) {
    csv << 85.0 + 0.1 * i;
    for (int j = 0; j < 401; ++j) csv << "," << 0.001 * (i + 1) * (j + 1);
    csv << "\n";
  }
  TempFile f(csv.str());
  const Dataset d = load_csv(f.path(), "octane");
  CHECK(d.n() == 60);
  CHECK(d.p() == 401);
}

TEST_CASE("load_covariates_csv drops the ignored column") {
  TempFile f("y,x1,x2\n9,1,2\n");
  const Eigen::MatrixXd X = load_covariates_csv(f.path(), "y");
  CHECK(X.rows() == 1);
  CHECK(X.cols() == 2);
  CHECK(X(0, 1) == 2.0);
}

TEST_CASE("standardize_response examples") {
  SUBCASE("1, 2, 3") {
    const Dataset s = standardize_response(with_y({1, 2, 3}));
    CHECK(s.y(0) == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(std::abs(s.y(1)) < 1e-14);
    CHECK(s.y(2) == doctest::Approx(1.0).epsilon(1e-14));
    REQUIRE(s.standardization);
    CHECK(s.standardization->mean == 2.0);
    CHECK(s.standardization->sd == doctest::Approx(1.0));
  }
  SUBCASE("constant response") {
    CHECK_THROWS_AS(standardize_response(with_y({5, 5, 5})), DataError);
  }
  SUBCASE("0, 10") {
    // mean 5, sample sd sqrt(50); (0 - 5)/sqrt(50) = -1/sqrt(2)
    const Dataset s = standardize_response(with_y({0, 10}));
    CHECK(s.y(0) == doctest::Approx(-0.7071067811865476).epsilon(1e-12));
    CHECK(s.y(1) == doctest::Approx(0.7071067811865476).epsilon(1e-12));
  }
  SUBCASE("single response") {
    CHECK_THROWS_AS(standardize_response(with_y({1})), DataError);
  }
}

TEST_CASE("standardization invariants and round trip") {
  for (std::uint64_t seed : {1u, 2u, 3u, 4u}) {
    const Dataset raw = make_synthetic(25, 3, 0.3, seed);
    const Dataset s = standardize_response(raw);
    const double mean = s.y.mean();
    const double sd = std::sqrt((s.y.array() - mean).square().sum() / (s.n() - 1.0));
    CHECK(std::abs(mean) < 1e-10);
    CHECK(std::abs(sd - 1.0) < 1e-10);
    for (Eigen::Index i = 0; i < s.n(); ++i) {
      CHECK(std::abs(s.standardization->inverse(s.y(i)) - raw.y(i)) < 1e-10);
    }
  }
}

TEST_CASE("covariates are left alone unless asked") {
  const Dataset raw = make_synthetic(10, 2, 0.1, 5);
  CHECK(standardize_response(raw).X == raw.X);
  const Dataset c = standardize_covariates(raw);
  for (Eigen::Index j = 0; j < c.p(); ++j) CHECK(std::abs(c.X.col(j).mean()) < 1e-12);
}

TEST_CASE("train_test_split examples") {
  const SplitPlan plan = train_test_split(60, 10, 7);
  CHECK(plan.train_indices.size() == 50);
  CHECK(plan.test_indices.size() == 10);
  std::set<Eigen::Index> all(plan.train_indices.begin(), plan.train_indices.end());
  all.insert(plan.test_indices.begin(), plan.test_indices.end());
  CHECK(all.size() == 60);
  CHECK(*all.begin() == 0);
  CHECK(*all.rbegin() == 59);

  CHECK_THROWS_AS(train_test_split(5, 5, 1), UsageError);
  CHECK_THROWS_AS(train_test_split(5, 0, 1), UsageError);

  const SplitPlan again = train_test_split(60, 10, 7);
  CHECK(again.test_indices == plan.test_indices);
  CHECK(again.train_indices == plan.train_indices);
  CHECK(train_test_split(60, 10, 8).test_indices != plan.test_indices);
}

TEST_CASE("kfold_plan examples and partition property") {
  auto sizes = [](const std::vector<SplitPlan>& folds) {
    std::vector<std::size_t> s;
    for (const auto& f : folds) s.push_back(f.test_indices.size());
    std::sort(s.begin(), s.end());
    return s;
  };
  CHECK(sizes(kfold_plan(10, 10, 1)) == std::vector<std::size_t>(10, 1));
  CHECK(sizes(kfold_plan(60, 10, 1)) == std::vector<std::size_t>(10, 6));
  CHECK(sizes(kfold_plan(7, 3, 1)) == std::vector<std::size_t>{2, 2, 3});
  CHECK_THROWS_AS(kfold_plan(5, 1, 1), UsageError);
  CHECK_THROWS_AS(kfold_plan(5, 6, 1), UsageError);

  for (Eigen::Index n : {7, 13, 50}) {
    for (Eigen::Index k : {2, 3, 5}) {
      const auto folds = kfold_plan(n, k, 99);
      std::vector<int> hits(static_cast<std::size_t>(n), 0);
      std::size_t lo = n, hi = 0;
      for (std::size_t f = 0; f < folds.size(); ++f) {
        CHECK(folds[f].fold_id == static_cast<int>(f));
        for (auto i : folds[f].test_indices) ++hits[static_cast<std::size_t>(i)];
        CHECK(folds[f].train_indices.size() + folds[f].test_indices.size() == static_cast<std::size_t>(n));
        lo = std::min(lo, folds[f].test_indices.size());
        hi = std::max(hi, folds[f].test_indices.size());
      }
      CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
      CHECK(hi - lo <= 1);
    }
  }
}

TEST_CASE("make_synthetic examples") {
  const Dataset clean = make_synthetic(30, 5, 0.0, 3);
  CHECK(clean.n() == 30);
  for (Eigen::Index i = 0; i < clean.n(); ++i) {
    CHECK(clean.y(i) == doctest::Approx(synthetic_signal(clean.X.row(i))).epsilon(1e-15));
  }
  const Dataset wide = make_synthetic(30, 200, 0.1, 3);
  CHECK(wide.X.rows() == 30);
  CHECK(wide.X.cols() == 200);

  const Dataset again = make_synthetic(30, 5, 0.0, 3);
  CHECK(again.X == clean.X);
  CHECK(again.y == clean.y);
  CHECK_THROWS_AS(make_synthetic(1, 5, 0.0, 3), UsageError);
  CHECK_THROWS_AS(make_synthetic(5, 0, 0.0, 3), UsageError);
  CHECK_THROWS_AS(make_synthetic(5, 1, -1.0, 3), UsageError);
}

TEST_CASE("make_synthetic rows are pairwise distinct") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Dataset d = make_synthetic(40, 2, 0.1, seed);
    for (Eigen::Index i = 0; i < d.n(); ++i) {
      for (Eigen::Index j = i + 1; j < d.n(); ++j) CHECK(d.X.row(i) != d.X.row(j));
    }
  }
}

TEST_CASE("Dataset validation") {
  Dataset d = with_y({1, 2});
  CHECK_NOTHROW(d.validate());
  d.X(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(d.validate(), DataError);
  Dataset e = with_y({1, 2});
  e.X = Eigen::MatrixXd::Zero(3, 1);
  CHECK_THROWS_AS(e.validate(), DataError);
  CHECK_THROWS_AS(Dataset{}.validate(), DataError);
}

TEST_CASE("covariate scaling is fitted once and reapplied") {
  Eigen::MatrixXd X(4, 2);
  X << 1, 5, 2, 5, 3, 5, 4, 5;
  const CovariateScaling s = fit_covariate_scaling(X);
  CHECK(s.mean(0) == 2.5);
  CHECK(s.sd(1) == 1.0);  // constant column is only centered
  const Eigen::MatrixXd Z = s.apply(X);
  CHECK(std::abs(Z.col(0).mean()) < 1e-15);
  CHECK(Z.col(1).isZero());
  Eigen::MatrixXd x_new(1, 2);
  x_new << 2.5, 6.0;
  CHECK(s.apply(x_new)(0, 0) == 0.0);
  CHECK(s.apply(x_new)(0, 1) == 1.0);
  CHECK_THROWS_AS(s.apply(Eigen::MatrixXd::Zero(1, 3)), UsageError);
}
