#pragma once

#include <string>

#include <Eigen/Dense>

namespace sprvm {

/// Cholesky factor of a symmetric positive-definite matrix.
///
/// On failure a diagonal jitter of 1e-10 * trace / dim is added and escalated
/// by a factor of ten up to three times; after that a NumericError is thrown
/// whose message starts with `context`.
Eigen::LLT<Eigen::MatrixXd> factor_spd(const Eigen::MatrixXd& A, const std::string& context);

/// Draw from N(P^{-1} h, P^{-1}) given the Cholesky factor of the precision P.
Eigen::VectorXd sample_gaussian_canonical(const Eigen::LLT<Eigen::MatrixXd>& precision_factor,
                                          const Eigen::VectorXd& h, const Eigen::VectorXd& z);

/// Symmetric eigen-decomposition with eigenvalues clipped below at zero.
struct SpectralGram {
  Eigen::MatrixXd vectors;
  Eigen::VectorXd values;
};
SpectralGram spectral_gram(const Eigen::MatrixXd& gram);

}  // namespace sprvm
