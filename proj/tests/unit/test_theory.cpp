#include <doctest.h>

#include <cmath>
#include <limits>

#include "metastab/errors.hpp"
#include "metastab/theory.hpp"

using namespace metastab;

namespace {

ProblemParams quadratic_params() {
  ProblemParams p;
  p.constants = RegularityConstants::with_radius(0, 0, 2, 2, 0.5, 1, 1);
  p.d = 2;
  p.epsilon = 0.2;
  p.delta = 0.1;
  p.r = 0.5;
  p.T = 1.0;
  return p;
}

}  // namespace

TEST_CASE("recurrence time examples") {
  CHECK(recurrence_time(1.0, 0.125, 1.0) == 0.0);
  CHECK(recurrence_time(2.0, 0.3, 0.3) == doctest::Approx(std::log(8.0)));
  CHECK(recurrence_time(1.0, std::exp(1.0), 8.0) == doctest::Approx(2.0));
  CHECK(recurrence_time(1.0, 8.0 * std::exp(1.0), 8.0) == doctest::Approx(2.0 * (1.0 + std::log(8.0))));
  CHECK_THROWS_AS(recurrence_time(1.0, 0.1, 1.0), PreconditionError);
  ProblemParams p = quadratic_params();
  CHECK(escape_time(p) == recurrence_time(p) + p.T);
}

TEST_CASE("moment bounds examples") {
  const auto k1 = RegularityConstants::with_radius(0, 0, 1, 1, 1, 1, 1);
  CHECK(position_moment_G1(k1, 2) == doctest::Approx(4.0));
  const RegularityConstants unit{0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0, 1.0};
  CHECK(gradient_moment_G0(unit, 1, std::numeric_limits<double>::infinity()) == doctest::Approx(2.0));
}

TEST_CASE("admissible pair satisfies both conditions") {
  const ProblemParams p = quadratic_params();
  const AdmissiblePair pair = admissible_eta_beta(p);
  CHECK(pair.eta_max > 0.0);
  CHECK(pair.beta_min > 0.0);
  CHECK(pair.eta_max <= eta_ceiling(p, pair.beta_min) * (1.0 + 1e-12));
  CHECK(pair.beta_min >= beta_floor(p, pair.eta_max) * (1.0 - 1e-12));
  CHECK(pair.G0 == doctest::Approx(gradient_moment_G0(p.constants, p.d, pair.beta_min)));
  CHECK(pair.G1 == doctest::Approx(position_moment_G1(p.constants, p.d)));
  const auto check = check_admissibility(p, pair.eta_max, pair.beta_min);
  CHECK(check.admissible);
  CHECK(check.failing.empty());
  const auto bad = check_admissibility(p, pair.eta_max * 10.0, pair.beta_min);
  CHECK_FALSE(bad.admissible);
  CHECK_FALSE(bad.failing.empty());
}

TEST_CASE("epsilon range violations name the inequality") {
  ProblemParams p = quadratic_params();
  p.epsilon = 5.0;
  try {
    admissible_eta_beta(p);
    FAIL("expected a precondition error");
  } catch (const PreconditionError& e) {
    CHECK(std::string(e.what()).find("epsilon") != std::string::npos);
  }
}

TEST_CASE("monotonicity in delta") {
  ProblemParams p = quadratic_params();
  double last_eta = 0.0, last_beta = std::numeric_limits<double>::infinity();
  for (int i = 1; i <= 10; ++i) {
    p.delta = 0.05 * i;
    const AdmissiblePair pair = admissible_eta_beta(p);
    // The fixpoint stops within one percent of the exact joint floor.
    CHECK(pair.eta_max >= last_eta * (1.0 - 0.03));
    CHECK(pair.beta_min <= last_beta * (1.0 + 0.03));
    last_eta = pair.eta_max;
    last_beta = pair.beta_min;
  }
}

TEST_CASE("exact ceilings are monotone in delta") {
  ProblemParams p = quadratic_params();
  double last_eta = 0.0, last_beta = std::numeric_limits<double>::infinity();
  for (int i = 1; i <= 10; ++i) {
    p.delta = 0.05 * i;
    const double e = eta_ceiling(p, 100.0);
    const double b = beta_floor(p, 1e-4);
    CHECK(e >= last_eta);
    CHECK(b <= last_beta);
    last_eta = e;
    last_beta = b;
  }
}

TEST_CASE("proposition 1 threshold") {
  CHECK(proposition1_beta_threshold(1.0, 1, 1.0, 0.0, 1.0) == doctest::Approx(128.0 / 3.0));
  CHECK(proposition1_beta_threshold(2.0, 3, 1.5, 2.0, 0.1) ==
        doctest::Approx(proposition1_beta_threshold(1.0, 3, 1.5, 2.0, 0.1) / 4.0));
  const double independent = (128.0 / (3.0 * 0.25)) * (10.0 + std::log(30.0));
  CHECK(proposition1_beta_threshold(0.5, 10, 1.0, 1.0, 0.1) == doctest::Approx(independent).epsilon(1e-12));
  CHECK(independent == doctest::Approx(2287.14).epsilon(1e-5));
  ProblemParams p = quadratic_params();
  p.epsilon = 1.0;
  CHECK_THROWS_AS(proposition1_beta_min(p), PreconditionError);
  p.epsilon = 0.5 * proposition1_epsilon_ceiling(p.constants);
  p.r = p.epsilon;
  CHECK(proposition1_beta_min(p) ==
        doctest::Approx(proposition1_beta_threshold(p.epsilon, p.d, p.constants.M, p.T, p.delta)));
}

TEST_CASE("martingale tail bound") {
  const Vector mu0 = Vector::Zero(1);
  const Matrix s0 = Matrix::Zero(1, 1);
  const TailBound b = martingale_tail_bound(mu0, s0, 2.0, 0.25, 1.0, 1);
  CHECK(b.raw == doctest::Approx(std::sqrt(4.0 / 3.0) * std::exp(-0.25)));
  CHECK(b.raw == doctest::Approx(0.8992).epsilon(1e-4));
  CHECK_FALSE(b.lambda_warning);
  const TailBound vac = martingale_tail_bound(mu0, s0, 2.0, 0.3, 0.0, 3);
  CHECK(vac.raw >= 1.0);
  CHECK(vac.clamped == 1.0);
  const TailBound wide = martingale_tail_bound(mu0, s0, 2.0, 0.75, 1.0, 1);
  CHECK(wide.lambda_warning);
  CHECK_THROWS_AS(martingale_tail_bound(mu0, Matrix::Identity(1, 1), 4.0, 0.3, 1.0, 1), PreconditionError);
}

TEST_CASE("chernoff consistency of the tail bound") {
  Vector mu(2);
  mu << 0.3, -0.2;
  Matrix sigma(2, 2);
  sigma << 0.1, 0.02, 0.02, 0.05;
  for (double lambda : {0.1, 0.25, 0.4}) {
    for (double h : {0.0, 0.5, 1.5}) {
      const double beta = 3.0;
      const Matrix inv = (Matrix::Identity(2, 2) - beta * lambda * sigma).inverse();
      const double expected = std::pow(1.0 / (1.0 - lambda), 1.0) * std::exp(-beta * lambda * h * h / 2.0) *
                              std::exp(beta * lambda / 2.0 * mu.dot(inv * mu));
      CHECK(martingale_tail_bound(mu, sigma, beta, lambda, h, 2).raw == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("tail bound moments") {
  Matrix H(2, 2);
  H << 1.0, 0.0, 0.0, 4.0;
  Vector y0(2);
  y0 << 1.0, 1.0;
  const TailMoments t = tail_bound_moments(H, y0, 0.5, 2.0);
  CHECK(t.mu(0) == doctest::Approx(std::exp(-0.5)));
  CHECK(t.mu(1) == doctest::Approx(2.0 * std::exp(-2.0)));
  CHECK(t.sigma(0, 0) == doctest::Approx(0.5 * (1.0 - std::exp(-1.0))));
  CHECK(t.sigma(1, 1) == doctest::Approx(0.5 * (1.0 - std::exp(-4.0))));
}

TEST_CASE("gaussian quadratic mgf examples") {
  CHECK(gaussian_quadratic_mgf(Vector::Zero(2), Matrix::Identity(2, 2), 0.0) == 1.0);
  CHECK(gaussian_quadratic_mgf(Vector::Zero(1), Matrix::Identity(1, 1), 0.25) == doctest::Approx(std::sqrt(2.0)));
  CHECK(gaussian_quadratic_mgf(Vector::Ones(1), Matrix::Identity(1, 1), 0.25) ==
        doctest::Approx(std::sqrt(2.0) * std::exp(0.5)));
  CHECK_THROWS_AS(gaussian_quadratic_mgf(Vector::Zero(1), Matrix::Identity(1, 1), 0.5), PreconditionError);
}

TEST_CASE("coupling bounds") {
  const CouplingBounds zero = coupling_bounds(1.0, 2.0, 1.0, 1, 0, 0.01);
  CHECK(zero.kl == 0.0);
  CHECK(zero.tv == 0.0);
  const CouplingBounds b = coupling_bounds(1.0, 2.0, 1.0, 1, 100, 0.01);
  CHECK(b.kl == doctest::Approx(0.02));
  CHECK(b.tv == doctest::Approx(0.1));
  const CouplingBounds big = coupling_bounds(10.0, 50.0, 100.0, 3, 100000, 0.01);
  CHECK(big.tv_raw > 1.0);
  CHECK(big.tv == 1.0);
  ProblemParams p = quadratic_params();
  double last = 0.0;
  for (std::size_t K : {1u, 10u, 100u}) {
    for (double eta : {1e-4, 1e-3, 1e-2}) {
      const double tv = kl_tv_coupling_bounds(p, K, eta, 10.0).tv;
      CHECK(tv >= 0.0);
      if (eta == 1e-2) {
        CHECK(tv >= last);
        last = tv;
      }
    }
  }
  CHECK(kl_tv_coupling_bounds(p, 10, 1e-3, 20.0).tv >= kl_tv_coupling_bounds(p, 10, 1e-3, 10.0).tv);
  CHECK_THROWS_AS(kl_tv_coupling_bounds(p, 10, 0.3, 10.0), PreconditionError);
}

TEST_CASE("event B bound") {
  const double v = event_B_bound(1, 1.0, 1.0, 0.1, 1.0, 1, 100.0, 1.0);
  const double first = 16.0 * 0.01 * std::exp(0.2);
  const double second = 2.0 * std::exp(-100.0 / 0.1 * std::exp(-0.2));
  CHECK(v == doctest::Approx(first + second).epsilon(1e-12));
  CHECK(v == doctest::Approx(0.19542).epsilon(1e-4));
  ProblemParams p = quadratic_params();
  const double start = event_B_bound(p, 1e-2, 1000.0);
  double last = std::numeric_limits<double>::infinity();
  for (double eta : {1e-2, 1e-3, 1e-4, 1e-5, 1e-6}) {
    const double b = event_B_bound(p, eta, 1000.0);
    CHECK(b < last);
    last = b;
  }
  CHECK(last < 1e-3 * start);
  CHECK(event_B_threshold(1.0, 4.0) == 0.25);
}

TEST_CASE("deviation thresholds") {
  const auto k = RegularityConstants::with_radius(0, 0, 0, 1, 1, 1, 1);
  const SubgaussianProxies s = subgaussian_proxies(k);
  CHECK(s.sigma0 == 1.0);
  CHECK(s.sigma1 == 1.0);
  CHECK(s.sigma2 == 1.0);
  CHECK(s.sigma == 1.0);
  CHECK(deviation_threshold_value(1.0, 1.0, 2, 1000) == doctest::Approx(std::sqrt(2.0 * std::log(1000.0) / 1000.0)));
  CHECK(deviation_threshold_value(1.0, 1.0, 2, 1000) == doctest::Approx(0.1175).epsilon(1e-3));
  ProblemParams p = quadratic_params();
  const DeviationThreshold t = deviation_threshold(p, 500);
  CHECK(t.risk == t.grad);
  CHECK(t.grad == t.hess);
  CHECK(t.c == doctest::Approx(deviation_constant(p)));
  p.c0 = 10.0;
  p.d = 20;
  CHECK_THROWS_AS(deviation_threshold(p, 30), PreconditionError);
}

TEST_CASE("sample floor") {
  CHECK(theorem2_sample_floor(1.0, 1.0, 1, 1.0) == 2);
  std::size_t last = 0;
  for (std::size_t d = 1; d <= 10; ++d) {
    const std::size_t n = theorem2_sample_floor(2.0, 1.5, d, 0.3);
    CHECK(n >= last);
    last = n;
    const double nd = static_cast<double>(n);
    CHECK(nd >= 2.0 * d * std::log(static_cast<double>(d)));
    CHECK(nd / std::log(nd) >= 2.0 * 2.25 * d / 0.09);
    const double prev = nd - 1.0;
    if (prev >= 2.0) {
      CHECK((prev < 2.0 * d * std::log(static_cast<double>(d)) || prev / std::log(prev) < 2.0 * 2.25 * d / 0.09));
    }
  }
  // Quartering the floor multiplies the n / ln n requirement by 16.
  const std::size_t a = theorem2_sample_floor(1.0, 1.0, 1, 0.4);
  const std::size_t b = theorem2_sample_floor(1.0, 1.0, 1, 0.1);
  const double ra = 1.0 / 0.16, rb = 1.0 / 0.01;
  CHECK(rb == doctest::Approx(16.0 * ra));
  CHECK(static_cast<double>(b) / std::log(static_cast<double>(b)) >= rb);
  CHECK(static_cast<double>(a) / std::log(static_cast<double>(a)) >= ra);
}

TEST_CASE("theory bounds record") {
  ProblemParams p = quadratic_params();
  p.r = p.epsilon / 8.0;
  const TheoryBounds b = compute_theory_bounds(p);
  CHECK(b.T_rec == 0.0);
  CHECK(b.T_esc == b.T_rec + p.T);
  CHECK(b.K0 == 0);
  CHECK(b.event_B_bound == 0.0);
  CHECK(b.tv_bound <= 1.0);
  for (const auto& f : describe_bounds(b)) {
    CAPTURE(f.key);
    CHECK(f.value >= 0.0);
    CHECK_FALSE(f.anchor.empty());
  }
  p.r = 0.5;
  const TheoryBounds c = compute_theory_bounds(p);
  CHECK(c.T_esc == c.T_rec + p.T);
  CHECK(c.T_rec > 0.0);
}

TEST_CASE("window indices") {
  CHECK(first_index_at_or_after(1.0, 0.1) == 10);
  CHECK(last_index_at_or_before(1.0, 0.1) == 10);
  CHECK(first_index_at_or_after(1.05, 0.1) == 11);
  CHECK(last_index_at_or_before(1.05, 0.1) == 10);
  CHECK(first_index_at_or_after(0.0, 0.1) == 0);
}
