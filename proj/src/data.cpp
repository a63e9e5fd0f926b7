#include "sprvm/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "sprvm/error.hpp"
#include "sprvm/random.hpp"

namespace sprvm {
namespace {

std::string trim(std::string_view s) {
  auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  auto last = s.find_last_not_of(" \t\r\n");
  std::string out(s.substr(first, last - first + 1));
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') {
    out = out.substr(1, out.size() - 2);
  }
  return out;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string_view rest(line);
  while (true) {
    auto comma = rest.find(',');
    cells.push_back(trim(rest.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return cells;
}

bool parse_double(const std::string& cell, double& out) {
  if (cell.empty()) return false;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  if (*begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

Table read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw DataError("'" + path + "' is empty (header row expected)");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // BOM
  t.header = split_line(line);
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    auto cells = split_line(line);
    if (cells.size() != t.header.size()) {
      std::ostringstream msg;
      msg << path << ": row " << row << " has " << cells.size() << " cells, header has "
          << t.header.size();
      throw DataError(msg.str());
    }
    std::vector<double> values(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (!parse_double(cells[c], values[c])) {
        std::ostringstream msg;
        msg << path << ": row " << row << ", column '" << t.header[c]
            << "': cannot parse '" << cells[c] << "' as a finite number";
        throw DataError(msg.str());
      }
    }
    t.rows.push_back(std::move(values));
  }
  if (t.rows.empty()) throw DataError("'" + path + "' has no data rows");
  return t;
}

}  // namespace

void Dataset::validate() const {
  if (y.size() < 1) throw DataError("dataset is empty");
  if (X.rows() != y.size()) throw DataError("response and covariates differ in row count");
  if (!X.allFinite()) throw DataError("covariates contain non-finite values");
  if (!y.allFinite()) throw DataError("response contains non-finite values");
}

Dataset Dataset::subset(const std::vector<Eigen::Index>& indices) const {
  Dataset out;
  out.y.resize(static_cast<Eigen::Index>(indices.size()));
  out.X.resize(static_cast<Eigen::Index>(indices.size()), X.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    auto r = indices[i];
    if (r < 0 || r >= n()) throw UsageError("subset index out of range");
    out.y[static_cast<Eigen::Index>(i)] = y[r];
    out.X.row(static_cast<Eigen::Index>(i)) = X.row(r);
  }
  out.names = names;
  out.response_name = response_name;
  out.standardization = standardization;
  return out;
}

Dataset load_csv(const std::string& path, const std::string& response_column) {
  Table t = read_table(path);
  auto it = std::find(t.header.begin(), t.header.end(), response_column);
  if (it == t.header.end()) {
    throw DataError("'" + path + "' has no column named '" + response_column + "'");
  }
  const auto resp = static_cast<std::size_t>(it - t.header.begin());

  Dataset d;
  d.response_name = response_column;
  const auto n = static_cast<Eigen::Index>(t.rows.size());
  const auto p = static_cast<Eigen::Index>(t.header.size() - 1);
  d.y.resize(n);
  d.X.resize(n, p);
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    if (c != resp) d.names.push_back(t.header[c]);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = t.rows[static_cast<std::size_t>(i)];
    Eigen::Index j = 0;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c == resp) {
        d.y[i] = row[c];
      } else {
        d.X(i, j++) = row[c];
      }
    }
  }
  return d;
}

Eigen::MatrixXd load_covariates_csv(const std::string& path, const std::string& ignore_column) {
  Table t = read_table(path);
  std::vector<std::size_t> keep;
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    if (ignore_column.empty() || t.header[c] != ignore_column) keep.push_back(c);
  }
  Eigen::MatrixXd X(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    for (std::size_t j = 0; j < keep.size(); ++j) {
      X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = t.rows[i][keep[j]];
    }
  }
  return X;
}

Standardization fit_standardization(const Eigen::VectorXd& y) {
  if (y.size() < 2) throw DataError("standardization needs at least two responses");
  const double mean = y.mean();
  const double ss = (y.array() - mean).square().sum();
  const double sd = std::sqrt(ss / static_cast<double>(y.size() - 1));
  if (!(sd > 0.0)) throw DataError("response has zero variance; cannot standardize");
  return {mean, sd};
}

Dataset standardize_response(const Dataset& d) {
  Standardization s = fit_standardization(d.y);
  Dataset out = d;
  out.y = (d.y.array() - s.mean) / s.sd;
  out.standardization = s;
  return out;
}

Eigen::MatrixXd CovariateScaling::apply(const Eigen::MatrixXd& X) const {
  if (X.cols() != mean.size()) throw UsageError("covariate count does not match the fitted scaling");
  return ((X.rowwise() - mean).array().rowwise() / sd.array()).matrix();
}

CovariateScaling fit_covariate_scaling(const Eigen::MatrixXd& X) {
  CovariateScaling s;
  const double n = static_cast<double>(X.rows());
  s.mean = X.colwise().mean();
  s.sd = Eigen::RowVectorXd::Ones(X.cols());
  if (X.rows() > 1) {
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
      const double sd = std::sqrt((X.col(j).array() - s.mean[j]).square().sum() / (n - 1.0));
      if (sd > 0.0) s.sd[j] = sd;
    }
  }
  return s;
}

Dataset standardize_covariates(const Dataset& d) {
  Dataset out = d;
  out.X = fit_covariate_scaling(d.X).apply(d.X);
  return out;
}

SplitPlan train_test_split(Eigen::Index n, Eigen::Index test_size, std::uint64_t seed) {
  if (test_size <= 0 || test_size >= n) {
    throw UsageError("test size must lie strictly between 0 and n = " + std::to_string(n));
  }
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  Rng rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng.engine());
  SplitPlan plan;
  plan.seed = seed;
  plan.test_indices.assign(perm.begin(), perm.begin() + test_size);
  plan.train_indices.assign(perm.begin() + test_size, perm.end());
  std::sort(plan.test_indices.begin(), plan.test_indices.end());
  std::sort(plan.train_indices.begin(), plan.train_indices.end());
  return plan;
}

std::vector<SplitPlan> kfold_plan(Eigen::Index n, Eigen::Index k, std::uint64_t seed) {
  if (k < 2 || k > n) throw UsageError("fold count must satisfy 2 <= k <= n");
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  Rng rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng.engine());

  std::vector<SplitPlan> folds;
  folds.reserve(static_cast<std::size_t>(k));
  Eigen::Index start = 0;
  for (Eigen::Index f = 0; f < k; ++f) {
    const Eigen::Index size = n / k + (f < n % k ? 1 : 0);
    SplitPlan plan;
    plan.seed = seed;
    plan.fold_id = static_cast<int>(f);
    for (Eigen::Index i = 0; i < n; ++i) {
      auto idx = perm[static_cast<std::size_t>(i)];
      if (i >= start && i < start + size) {
        plan.test_indices.push_back(idx);
      } else {
        plan.train_indices.push_back(idx);
      }
    }
    std::sort(plan.test_indices.begin(), plan.test_indices.end());
    std::sort(plan.train_indices.begin(), plan.train_indices.end());
    folds.push_back(std::move(plan));
    start += size;
  }
  return folds;
}

double synthetic_signal(const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  const auto p = x.size();
  double f = std::sin(1.5 * x[0]);
  if (p > 1) f += 0.5 * std::exp(-x[1] * x[1]);
  if (p > 2) f += 0.4 * x[2] * std::tanh(x[0]);
  return f;
}

Dataset make_synthetic(Eigen::Index n, Eigen::Index p, double noise_sd, std::uint64_t seed) {
  if (n < 2 || p < 1 || !(noise_sd >= 0.0)) {
    throw UsageError("make_synthetic requires n >= 2, p >= 1 and noise_sd >= 0");
  }
  Rng rng(seed);
  Dataset d;
  d.X.resize(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) d.X(i, j) = rng.normal();
  }
  d.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    d.y[i] = synthetic_signal(d.X.row(i)) + noise_sd * rng.normal();
  }
  d.response_name = "y";
  for (Eigen::Index j = 0; j < p; ++j) d.names.push_back("x" + std::to_string(j + 1));
  return d;
}

}  // namespace sprvm
