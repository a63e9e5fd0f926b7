#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace sprvm {

enum class KernelFamily { kGaussian, kLaplace, kPolynomial };

std::string to_string(KernelFamily family);
KernelFamily parse_kernel_family(const std::string& name);

/// Kernel family plus its parameter: bandwidth for Gaussian/Laplace, degree
/// (a positive integer) for Polynomial.
struct KernelSpec {
  KernelFamily family = KernelFamily::kGaussian;
  double theta = 1.0;

  /// Throws UsageError on a non-finite or non-positive theta, or a
  /// non-integral polynomial degree.
  void validate() const;
};

/// Gaussian exp(-|a-b|^2 / theta^2), Laplace exp(-|a-b| / theta),
/// Polynomial (1 + a'b)^theta. Polynomial overflow throws NumericError.
double kernel_value(const KernelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& a,
                    const Eigen::Ref<const Eigen::VectorXd>& b);

/// The n x (n+1) design matrix: an intercept column of ones followed by the
/// kernel evaluations k(x_i, x_j) against every training row.
class DesignMatrix {
 public:
  DesignMatrix(KernelSpec spec, std::shared_ptr<const Eigen::MatrixXd> train_rows,
               Eigen::MatrixXd K);

  const Eigen::MatrixXd& K() const { return K_; }
  const KernelSpec& spec() const { return spec_; }
  const Eigen::MatrixXd& source_rows() const { return *rows_; }
  std::shared_ptr<const Eigen::MatrixXd> source_rows_ptr() const { return rows_; }

  Eigen::Index n() const { return K_.rows(); }
  Eigen::Index columns() const { return K_.cols(); }

 private:
  KernelSpec spec_;
  std::shared_ptr<const Eigen::MatrixXd> rows_;
  Eigen::MatrixXd K_;
};

DesignMatrix build_design(const KernelSpec& spec, const Eigen::MatrixXd& X);
DesignMatrix build_design(const KernelSpec& spec, std::shared_ptr<const Eigen::MatrixXd> X);

/// Wraps an explicit n x (n+1) matrix (used for hand-built test cases).
DesignMatrix design_from_matrix(Eigen::MatrixXd K, KernelSpec spec = {});

/// (1, k(x_new, x_1), ..., k(x_new, x_n)).
Eigen::VectorXd prediction_row(const KernelSpec& spec, const Eigen::MatrixXd& X_train,
                               const Eigen::Ref<const Eigen::VectorXd>& x_new);

/// Prediction rows for every row of X_new, stacked as an m x (n+1) matrix.
Eigen::MatrixXd prediction_rows(const KernelSpec& spec, const Eigen::MatrixXd& X_train,
                                const Eigen::MatrixXd& X_new);

struct ConditionIIIReport {
  bool holds = true;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> violations;  // zero-based (i, j)
};

/// Kernel-block condition: k_jj != 0 and k_ij / k_jj != 1 for all i != j.
/// A ratio within 1e-12 of one, or |k_jj| <= 1e-300, counts as a violation.
ConditionIIIReport check_condition_iii(const DesignMatrix& K);

/// True iff the number of singular values above tol * sigma_max equals n.
bool check_full_row_rank(const DesignMatrix& K, double tol = 1e-10);

}  // namespace sprvm
