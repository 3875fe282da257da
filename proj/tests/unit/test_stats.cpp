#include <doctest.h>

#include <cmath>
#include <vector>

#include "metastab/stats.hpp"

using namespace metastab;

TEST_CASE("wilson interval against the closed form") {
  const double z = 1.959963984540054;
  const std::size_t s = 37, n = 500;
  const double p = static_cast<double>(s) / n;
  const double den = 1.0 + z * z / n;
  const double centre = (p + z * z / (2.0 * n)) / den;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / den;
  const Interval ci = wilson_interval(s, n, z);
  CHECK(ci.lower == doctest::Approx(centre - half).epsilon(1e-12));
  CHECK(ci.upper == doctest::Approx(centre + half).epsilon(1e-12));

  const Interval zero = wilson_interval(0, 100);
  CHECK(zero.lower == doctest::Approx(0.0));
  CHECK(zero.upper > 0.0);
  const Interval all = wilson_interval(100, 100);
  CHECK(all.upper == doctest::Approx(1.0));
}

TEST_CASE("wilson interval contains the point estimate and narrows with n") {
  for (std::size_t n : {10u, 100u, 1000u}) {
    for (std::size_t s = 0; s <= n; s += n / 10) {
      const Interval ci = wilson_interval(s, n);
      const double p = static_cast<double>(s) / n;
      CHECK(ci.lower <= p + 1e-15);
      CHECK(ci.upper >= p - 1e-15);
      CHECK(ci.lower >= 0.0);
      CHECK(ci.upper <= 1.0);
    }
  }
  CHECK(wilson_interval(500, 1000).upper - wilson_interval(500, 1000).lower <
        wilson_interval(50, 100).upper - wilson_interval(50, 100).lower);
}

TEST_CASE("mean, standard error, quantile") {
  const std::vector<double> xs{1.0, 2.0, 3.0, 4.0, 5.0};
  const MeanEstimate m = mean_with_error(xs);
  CHECK(m.mean == doctest::Approx(3.0));
  CHECK(m.standard_error == doctest::Approx(std::sqrt(2.5 / 5.0)));
  CHECK(m.count == 5);
  CHECK(quantile(xs, 0.0) == 1.0);
  CHECK(quantile(xs, 1.0) == 5.0);
  CHECK(quantile(xs, 0.5) == 3.0);
  CHECK(quantile(xs, 0.9) == doctest::Approx(4.6));
}

TEST_CASE("least squares line") {
  const std::vector<double> x{0.0, 1.0, 2.0, 3.0};
  const std::vector<double> y{1.0, 3.0, 5.0, 7.0};
  const LinearFit f = fit_line(x, y);
  CHECK(f.slope == doctest::Approx(2.0));
  CHECK(f.intercept == doctest::Approx(1.0));
  CHECK(f.r_squared == doctest::Approx(1.0));
  const std::vector<double> y2{1.0, 2.0, 1.0, 2.0};
  const LinearFit g = fit_line(x, y2);
  CHECK(g.slope == doctest::Approx(0.2));
  CHECK(g.r_squared == doctest::Approx(0.2));
}

TEST_CASE("truncated normal variance") {
  // 1 - 2 a phi(a) / (2 Phi(a) - 1)
  const double a = 1.0;
  const double phi = std::exp(-0.5) / std::sqrt(2.0 * M_PI);
  const double mass = std::erf(a / std::sqrt(2.0));
  CHECK(truncated_normal_variance(a) == doctest::Approx(1.0 - 2.0 * a * phi / mass).epsilon(1e-12));
  CHECK(truncated_normal_variance(40.0) == doctest::Approx(1.0));
}
