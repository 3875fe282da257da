#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "metastab/errors.hpp"
#include "metastab/landscape.hpp"

using namespace metastab;

namespace {

Vector v2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

}  // namespace

TEST_CASE("regularity constants validation") {
  RegularityConstants k = RegularityConstants::with_radius(0, 0, 1, 1, 1, 1, 4);
  CHECK(k.R == doctest::Approx(2.0));
  CHECK_NOTHROW(k.validate());
  k.R = 3.0;
  CHECK_THROWS_AS(k.validate(), PreconditionError);
  RegularityConstants bad = RegularityConstants::with_radius(0, 0, 1, 1, 1, 1, 1);
  bad.m = 0.0;
  CHECK_THROWS_AS(bad.validate(), PreconditionError);
  CHECK_THROWS_AS(RegularityConstants::with_radius(-1, 0, 1, 1, 1, 1, 1), PreconditionError);
}

TEST_CASE("quadratic landscape") {
  const auto q = build_quadratic(v2(1.0, 2.0), 1.0, 0.5);
  const auto& k = q->constants();
  CHECK(k.m == 1.0);
  CHECK(k.M == 2.0);
  CHECK(k.C == 2.0);
  CHECK(k.A == 0.0);
  CHECK(k.B == 0.0);
  CHECK(k.L == 0.5);
  CHECK(k.R == doctest::Approx(1.0));
  const Vector w = v2(1.0, -1.0);
  CHECK(q->value(w) == doctest::Approx(1.5));
  CHECK((q->gradient(w) - v2(1.0, -2.0)).norm() == 0.0);
  const LocalMinimum min = find_local_minimum(*q, v2(0.5, 0.5));
  CHECK(min.location.norm() < 1e-10);
  CHECK(min.min_eigenvalue == doctest::Approx(1.0));
  Matrix notpd(2, 2);
  notpd << 1.0, 0.0, 0.0, -1.0;
  CHECK_THROWS_AS(build_quadratic(notpd), PreconditionError);
}

TEST_CASE("double well constants and shape") {
  const auto dw = build_double_well(1, 1.0);
  const auto& k = dw->constants();
  CHECK(k.m == doctest::Approx(0.5));
  CHECK(k.b == doctest::Approx(9.0 / 16.0));
  CHECK(k.R == doctest::Approx(std::sqrt(9.0 / 8.0)));
  CHECK(k.M == doctest::Approx(12.5));
  CHECK(k.L == doctest::Approx(12.0 * std::sqrt(9.0 / 8.0)));
  CHECK(k.A == doctest::Approx(0.25));
  CHECK(k.B == 0.0);
  CHECK(k.C == doctest::Approx(1.0));
  CHECK(dw->barrier_height() == doctest::Approx(0.25));
  Vector zero = Vector::Zero(1), one = Vector::Ones(1);
  CHECK(dw->value(zero) - dw->value(one) == doctest::Approx(0.25));
  const LocalMinimum m = find_local_minimum(*dw, one * 0.9);
  CHECK(m.location(0) == doctest::Approx(1.0));
  CHECK(m.min_eigenvalue == doctest::Approx(2.0));
  CHECK(m.gradient_norm_residual <= 1e-10);
  // (m, b)-dissipativity over probes out to 10 max(1, R).
  const auto rep = check_dissipativity(*dw, k.m, k.b, 500);
  CHECK(rep.pass);
  CHECK(rep.min_margin >= -1e-9);
}

TEST_CASE("degenerate minimum is reported") {
  const auto dw = build_double_well(2, 1.0);
  MinimumSearchOptions opts;
  opts.curvature_floor = 1.5;
  CHECK_THROWS_AS(find_local_minimum(*dw, v2(1.0, 0.0), opts), DegenerateMinimumError);
  // The saddle is not a minimum under the declared curvature floor.
  CHECK_THROWS(find_local_minimum(*dw, v2(0.0, 0.0)));
}

TEST_CASE("start outside B(R) is a precondition") {
  const auto q = build_quadratic(v2(1.0, 2.0), 1.0);
  CHECK_THROWS_AS(find_local_minimum(*q, v2(5.0, 0.0)), PreconditionError);
  MinimumSearchOptions opts;
  opts.allow_start_outside_ball = true;
  CHECK(find_local_minimum(*q, v2(5.0, 0.0), opts).location.norm() < 1e-10);
}

TEST_CASE("gaussian location family") {
  TruncatedGaussianLaw law{v2(0.5, -0.25), 2.0};
  GaussianLocationFamily fam(law, 0.25, 1.0);
  const auto& k = fam.constants();
  const double kappa = 1.5;
  const double z = law.mean.norm() + 2.0 * std::sqrt(2.0);
  CHECK(k.A == doctest::Approx(z * z / 2.0));
  CHECK(k.B == doctest::Approx(z));
  CHECK(k.C == doctest::Approx(kappa));
  CHECK(k.M == doctest::Approx(kappa));
  CHECK(k.m == doctest::Approx(kappa / 2.0));
  CHECK(k.b == doctest::Approx(z * z / (2.0 * kappa)));

  const Dataset a = fam.draw(500, 11), b = fam.draw(500, 11), c = fam.draw(500, 12);
  CHECK(a.samples == b.samples);
  CHECK(a.samples != c.samples);
  CHECK((a.samples.rowwise() - law.mean.transpose()).cwiseAbs().maxCoeff() <= 2.0);

  const auto emp = fam.empirical(a);
  REQUIRE(emp->population());
  // Empirical risk equals the sample average of the loss.
  const Vector w = v2(0.3, 0.7);
  double avg = 0.0;
  for (Eigen::Index i = 0; i < a.samples.rows(); ++i) {
    avg += 0.5 * (w - a.samples.row(i).transpose()).squaredNorm() + 0.25 * w.squaredNorm();
  }
  avg /= static_cast<double>(a.size());
  CHECK(emp->value(w) == doctest::Approx(avg).epsilon(1e-12));

  // Population risk against a large-sample average.
  const Dataset big = fam.draw(400000, 3);
  const auto emp_big = fam.empirical(big);
  CHECK(emp_big->value(w) == doctest::Approx(fam.population()->value(w)).epsilon(5e-3));
}

TEST_CASE("perturbed quadratic family") {
  PerturbedQuadraticLaw law{v2(1.0, 2.0), 0.25, 0.5};
  PerturbedQuadraticFamily fam(law);
  const auto& k = fam.constants();
  CHECK(k.m == doctest::Approx(0.375));
  CHECK(k.M == doctest::Approx(2.25));
  CHECK(k.B == doctest::Approx(0.5 * std::sqrt(2.0)));
  CHECK(k.b == doctest::Approx(0.5 / (2.0 * 0.75)));
  const Dataset data = fam.draw(1000, 5);
  CHECK(data.samples.cols() == 4);
  const auto emp = fam.empirical(data);
  const Vector w = v2(-0.4, 0.2);
  double avg = 0.0;
  for (Eigen::Index i = 0; i < data.samples.rows(); ++i) {
    const auto r = data.samples.row(i);
    avg += 0.5 * ((1.0 + r(0)) * w(0) * w(0) + (2.0 + r(1)) * w(1) * w(1)) - (r(2) * w(0) + r(3) * w(1));
  }
  CHECK(emp->value(w) == doctest::Approx(avg / 1000.0).epsilon(1e-12));
  CHECK_THROWS_AS(PerturbedQuadraticFamily(PerturbedQuadraticLaw{v2(0.2, 2.0), 0.25, 0.5}), PreconditionError);
}

TEST_CASE("dataset csv export") {
  TruncatedGaussianLaw law{v2(0.0, 0.0), 3.0};
  const Dataset d = law.draw(3, 1);
  const auto path = std::filesystem::temp_directory_path() / "metastab_dataset.csv";
  write_dataset_csv(d, path.string());
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "z_1,z_2");
  std::size_t rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  CHECK(rows == 3);
}

TEST_CASE("strongly Morse certificate") {
  const auto q = build_quadratic(v2(1.0, 2.0), 1.0);
  CHECK(certify_strongly_morse(*q, 0.1, 0.5, 41).pass);
  CHECK_FALSE(certify_strongly_morse(*q, 0.1, 1.5, 41).pass);
  const auto dw = build_double_well(1, 1.0);
  // Near the saddle |lambda| = 1, near the minima 2.
  const auto rep = certify_strongly_morse(*dw, 0.05, 0.5, 2001);
  CHECK(rep.pass);
  CHECK(rep.worst_min_abs_eigenvalue == doctest::Approx(1.0).epsilon(0.05));
  CHECK_FALSE(certify_strongly_morse(*dw, 0.05, 1.5, 2001).pass);
  CHECK_THROWS_AS(certify_strongly_morse(*build_double_well(4, 1.0), 0.1, 0.1, 5), PreconditionError);
}

TEST_CASE("derivative, Lipschitz and remainder invariants on every shipped landscape") {
  TruncatedGaussianLaw law{v2(0.2, 0.1), 3.0};
  GaussianLocationFamily gl(law, 0.1, 1.0);
  PerturbedQuadraticFamily pq(PerturbedQuadraticLaw{v2(1.0, 2.0), 0.25, 0.5});
  std::vector<LandscapePtr> all{build_quadratic(v2(1.0, 2.0), 1.0), build_double_well(1, 1.0),
                                build_double_well(3, 2.0), gl.empirical(gl.draw(200, 1)), gl.population(),
                                pq.empirical(pq.draw(200, 2)), pq.population()};
  for (const auto& l : all) {
    CAPTURE(l->family());
    const double R = l->constants().R;
    const auto d = check_derivatives(*l, R, 100, 7);
    CHECK(d.max_gradient_error < 1e-6);
    CHECK(d.max_hessian_error < 1e-6);
    const auto lip = check_lipschitz(*l, R, 100, 8);
    CHECK(lip.max_gradient_ratio <= 1.0 + 1e-12);
    CHECK(lip.max_hessian_ratio <= 1.0 + 1e-12);
    Vector start = Vector::Zero(static_cast<Eigen::Index>(l->dimension()));
    if (l->family() == "double_well") start(0) = 1.0;
    const LocalMinimum min = find_local_minimum(*l, start);
    const auto rem = check_linearization_remainder(*l, min, 100, 9);
    CHECK(rem.max_ratio <= 1.0);
  }
}

TEST_CASE("sample_ball stays in the ball") {
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) CHECK(sample_ball(rng, 3, 2.0).norm() <= 2.0);
}
