#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sprvm {

/// Affine map applied to the raw response: y' = (y - mean) / sd.
struct Standardization {
  double mean = 0.0;
  double sd = 1.0;

  double forward(double raw) const { return (raw - mean) / sd; }
  double inverse(double standardized) const { return standardized * sd + mean; }
};

/// Response vector plus covariate rows.
struct Dataset {
  Eigen::VectorXd y;
  Eigen::MatrixXd X;  // n x p, one observation per row
  std::vector<std::string> names;  // covariate labels, may be empty
  std::string response_name;
  std::optional<Standardization> standardization;

  Eigen::Index n() const { return y.size(); }
  Eigen::Index p() const { return X.cols(); }

  /// Throws DataError when the shape or finiteness invariants are violated.
  void validate() const;

  /// Rows `indices` of this dataset, keeping names and standardization.
  Dataset subset(const std::vector<Eigen::Index>& indices) const;
};

struct SplitPlan {
  std::vector<Eigen::Index> train_indices;
  std::vector<Eigen::Index> test_indices;
  std::uint64_t seed = 0;
  std::optional<int> fold_id;
};

/// Reads a headered, comma-separated file. The named column becomes `y`;
/// every other column is a covariate, in file order.
Dataset load_csv(const std::string& path, const std::string& response_column);

/// Reads a headered CSV of covariates only (for prediction). A column named
/// `ignore_column` is dropped if present.
Eigen::MatrixXd load_covariates_csv(const std::string& path,
                                    const std::string& ignore_column = {});

/// Centers and scales the response to sample mean 0 and sample sd 1
/// (n - 1 denominator). Records the transform on the returned dataset.
Dataset standardize_response(const Dataset& d);

/// Statistics that `standardize_response` would use, without applying them.
Standardization fit_standardization(const Eigen::VectorXd& y);

/// Per-column centering and scaling of covariates, fitted on training rows
/// and reapplied to new points. Constant columns are only centered.
struct CovariateScaling {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd sd;
  Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const;
};
CovariateScaling fit_covariate_scaling(const Eigen::MatrixXd& X);
/// Opt-in column standardization of X (not applied by default).
Dataset standardize_covariates(const Dataset& d);

SplitPlan train_test_split(Eigen::Index n, Eigen::Index test_size, std::uint64_t seed);

/// k folds over a seeded permutation; fold sizes differ by at most one.
std::vector<SplitPlan> kfold_plan(Eigen::Index n, Eigen::Index k, std::uint64_t seed);

/// Gaussian covariates with a smooth nonlinear response of the first few
/// columns plus N(0, noise_sd^2) noise. The response is left unstandardized.
Dataset make_synthetic(Eigen::Index n, Eigen::Index p, double noise_sd, std::uint64_t seed);

/// Noise-free value of the synthetic regression function at one row.
double synthetic_signal(const Eigen::Ref<const Eigen::RowVectorXd>& x);

}  // namespace sprvm
