#include <doctest.h>

#include <cmath>

#include "metastab/linalg.hpp"

using namespace metastab;

TEST_CASE("symmetric eigen decomposition") {
  Matrix a(2, 2);
  a << 2.0, 1.0, 1.0, 2.0;
  const SymmetricEigen e(a);
  CHECK(e.values(0) == doctest::Approx(1.0));
  CHECK(e.values(1) == doctest::Approx(3.0));
  const Matrix root = e.apply([](double x) { return std::sqrt(x); });
  CHECK((root * root - a).norm() < 1e-12);
  CHECK(min_eigenvalue(a) == doctest::Approx(1.0));
  Matrix b(2, 2);
  b << -0.5, 0.0, 0.0, 2.0;
  CHECK(min_abs_eigenvalue(b) == doctest::Approx(0.5));
  CHECK(min_eigenvalue(b) == doctest::Approx(-0.5));
}

TEST_CASE("weighted and spectral norms") {
  Matrix h(2, 2);
  h << 1.0, 0.0, 0.0, 4.0;
  Vector v(2);
  v << 3.0, 1.0;
  CHECK(weighted_norm(v, h) == doctest::Approx(std::sqrt(13.0)));
  Matrix r(2, 2);
  r << 0.0, 2.0, 0.0, 0.0;
  CHECK(spectral_norm(r) == doctest::Approx(2.0));
  CHECK(spectral_norm(Matrix::Zero(3, 3)) == 0.0);
}
