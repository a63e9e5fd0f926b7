#include "sprvm/linalg.hpp"

#include <sstream>

#include "sprvm/error.hpp"

namespace sprvm {

Eigen::LLT<Eigen::MatrixXd> factor_spd(const Eigen::MatrixXd& A, const std::string& context) {
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() == Eigen::Success) return llt;

  const double dim = static_cast<double>(A.rows());
  double jitter = 1e-10 * A.trace() / dim;
  for (int attempt = 0; attempt < 3; ++attempt, jitter *= 10.0) {
    Eigen::MatrixXd B = A;
    B.diagonal().array() += jitter;
    llt.compute(B);
    if (llt.info() == Eigen::Success) return llt;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
  const auto& sv = svd.singularValues();
  std::ostringstream msg;
  msg << context << ": Cholesky factorization failed after jitter escalation (condition estimate "
      << (sv[sv.size() - 1] > 0 ? sv[0] / sv[sv.size() - 1] : INFINITY) << ")";
  throw NumericError(msg.str());
}

Eigen::VectorXd sample_gaussian_canonical(const Eigen::LLT<Eigen::MatrixXd>& factor,
                                          const Eigen::VectorXd& h, const Eigen::VectorXd& z) {
  // P = L L^T: mean solves P m = h, and L^{-T} z has covariance P^{-1}.
  Eigen::VectorXd mean = factor.solve(h);
  Eigen::VectorXd noise = factor.matrixU().solve(z);
  return mean + noise;
}

SpectralGram spectral_gram(const Eigen::MatrixXd& gram) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  if (eig.info() != Eigen::Success) throw NumericError("eigen-decomposition of the Gram matrix failed");
  SpectralGram out{eig.eigenvectors(), eig.eigenvalues().cwiseMax(0.0)};
  return out;
}

}  // namespace sprvm
