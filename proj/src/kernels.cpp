#include "sprvm/kernels.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "sprvm/error.hpp"

namespace sprvm {

std::string to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::kGaussian: return "gaussian";
    case KernelFamily::kLaplace: return "laplace";
    case KernelFamily::kPolynomial: return "poly";
  }
  return "unknown";
}

KernelFamily parse_kernel_family(const std::string& name) {
  if (name == "gaussian") return KernelFamily::kGaussian;
  if (name == "laplace") return KernelFamily::kLaplace;
  if (name == "poly" || name == "polynomial") return KernelFamily::kPolynomial;
  throw UsageError("unknown kernel '" + name + "' (expected gaussian, laplace or poly)");
}

void KernelSpec::validate() const {
  if (!std::isfinite(theta) || theta <= 0.0) {
    throw UsageError("kernel parameter theta must be finite and positive");
  }
  if (family == KernelFamily::kPolynomial && theta != std::floor(theta)) {
    throw UsageError("polynomial kernel degree must be a positive integer");
  }
}

namespace {

double polynomial_value(double base, double degree) {
  if (base != 0.0 && degree * std::log(std::abs(base)) > std::log(std::numeric_limits<double>::max())) {
    throw NumericError("polynomial kernel overflow");
  }
  return std::pow(base, degree);
}

}  // namespace

double kernel_value(const KernelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& a,
                    const Eigen::Ref<const Eigen::VectorXd>& b) {
  if (a.size() != b.size()) throw UsageError("kernel arguments differ in length");
  switch (spec.family) {
    case KernelFamily::kGaussian:
      return std::exp(-(a - b).squaredNorm() / (spec.theta * spec.theta));
    case KernelFamily::kLaplace:
      return std::exp(-(a - b).norm() / spec.theta);
    case KernelFamily::kPolynomial:
      return polynomial_value(1.0 + a.dot(b), spec.theta);
  }
  return 0.0;
}

DesignMatrix::DesignMatrix(KernelSpec spec, std::shared_ptr<const Eigen::MatrixXd> train_rows,
                           Eigen::MatrixXd K)
    : spec_(spec), rows_(std::move(train_rows)), K_(std::move(K)) {}

DesignMatrix build_design(const KernelSpec& spec, const Eigen::MatrixXd& X) {
  return build_design(spec, std::make_shared<const Eigen::MatrixXd>(X));
}

DesignMatrix build_design(const KernelSpec& spec, std::shared_ptr<const Eigen::MatrixXd> X) {
  spec.validate();
  const auto n = X->rows();
  if (n < 1) throw UsageError("design matrix needs at least one training row");
  Eigen::MatrixXd K(n, n + 1);
  K.col(0).setOnes();
  // Transposed copy keeps row access contiguous.
  const Eigen::MatrixXd Xt = X->transpose();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      double v;
      try {
        v = kernel_value(spec, Xt.col(i), Xt.col(j));
      } catch (const NumericError&) {
        std::ostringstream msg;
        msg << "non-finite kernel value at (" << i << ", " << j << ")";
        throw NumericError(msg.str());
      }
      if (!std::isfinite(v)) {
        std::ostringstream msg;
        msg << "non-finite kernel value at (" << i << ", " << j << ")";
        throw NumericError(msg.str());
      }
      K(i, j + 1) = v;
      K(j, i + 1) = v;
    }
  }
  return DesignMatrix(spec, std::move(X), std::move(K));
}

DesignMatrix design_from_matrix(Eigen::MatrixXd K, KernelSpec spec) {
  if (K.cols() != K.rows() + 1) throw UsageError("design matrix must be n x (n+1)");
  auto rows = std::make_shared<const Eigen::MatrixXd>(K.rows(), 0);
  return DesignMatrix(spec, std::move(rows), std::move(K));
}

Eigen::VectorXd prediction_row(const KernelSpec& spec, const Eigen::MatrixXd& X_train,
                               const Eigen::Ref<const Eigen::VectorXd>& x_new) {
  if (x_new.size() != X_train.cols()) {
    throw UsageError("new point has " + std::to_string(x_new.size()) +
                     " covariates, training data has " + std::to_string(X_train.cols()));
  }
  const auto n = X_train.rows();
  Eigen::VectorXd row(n + 1);
  row[0] = 1.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    row[j + 1] = kernel_value(spec, x_new, X_train.row(j).transpose());
  }
  return row;
}

Eigen::MatrixXd prediction_rows(const KernelSpec& spec, const Eigen::MatrixXd& X_train,
                                const Eigen::MatrixXd& X_new) {
  Eigen::MatrixXd rows(X_new.rows(), X_train.rows() + 1);
  for (Eigen::Index i = 0; i < X_new.rows(); ++i) {
    rows.row(i) = prediction_row(spec, X_train, X_new.row(i).transpose()).transpose();
  }
  return rows;
}

ConditionIIIReport check_condition_iii(const DesignMatrix& design) {
  constexpr double kRatioTol = 1e-12;
  constexpr double kZeroTol = 1e-300;
  const auto& K = design.K();
  const auto n = design.n();
  ConditionIIIReport report;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double kjj = K(j, j + 1);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (i == j) continue;
      bool bad = std::abs(kjj) <= kZeroTol;
      if (!bad) bad = std::abs(K(i, j + 1) / kjj - 1.0) <= kRatioTol;
      if (bad) report.violations.emplace_back(i, j);
    }
  }
  report.holds = report.violations.empty();
  return report;
}

bool check_full_row_rank(const DesignMatrix& design, double tol) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(design.K());
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv[0] <= 0.0) return false;
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv[i] > tol * sv[0]) ++rank;
  }
  return rank == design.n();
}

}  // namespace sprvm
