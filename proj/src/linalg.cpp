#include "metastab/linalg.hpp"

#include <cmath>

namespace metastab {

double weighted_norm(const Vector& v, const Matrix& a) {
  return std::sqrt(std::max(0.0, v.dot(a * v)));
}

double spectral_norm(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues()(0);
}

SymmetricEigen::SymmetricEigen(const Matrix& symmetric) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetric);
  values = solver.eigenvalues();
  vectors = solver.eigenvectors();
}

double min_eigenvalue(const Matrix& symmetric) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetric, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

double min_abs_eigenvalue(const Matrix& symmetric) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetric, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().cwiseAbs().minCoeff();
}

}  // namespace metastab
