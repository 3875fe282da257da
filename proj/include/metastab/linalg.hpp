#pragma once

#include <Eigen/Dense>

namespace metastab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// ||v||_A = sqrt(<v, A v>) for a positive definite A.
double weighted_norm(const Vector& v, const Matrix& a);

/// Largest singular value.
double spectral_norm(const Matrix& a);

/// Eigendecomposition of a symmetric matrix; eigenvalues ascending.
struct SymmetricEigen {
  Vector values;
  Matrix vectors;  // columns are eigenvectors

  explicit SymmetricEigen(const Matrix& symmetric);

  /// V f(Lambda) V^T for an elementwise spectral function f.
  template <typename Fn>
  Matrix apply(Fn&& fn) const {
    Vector mapped = values.unaryExpr(fn);
    return vectors * mapped.asDiagonal() * vectors.transpose();
  }
};

/// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Matrix& symmetric);

/// min_j |lambda_j| of a symmetric matrix.
double min_abs_eigenvalue(const Matrix& symmetric);

}  // namespace metastab
