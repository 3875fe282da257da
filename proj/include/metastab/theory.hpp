#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "metastab/landscape.hpp"
#include "metastab/linalg.hpp"

namespace metastab {

struct ProblemParams {
  RegularityConstants constants;
  std::size_t d = 1;
  double epsilon = 0.1;
  double delta = 0.1;
  double r = 1.0;
  double T = 1.0;
  double eps0 = 0.1;
  double c1 = 1.0;
  double c2 = 1.0;
  double c = 1.0;
  double c0 = 1.0;
  double c_prime = 1.0;
  /// Constant of the Brownian reflection tail 2d exp(-c u^2 / (d eta)).
  double c_reflection = 0.5;

  /// epsilon > 0, delta in (0,1), r > 0, T >= 0, d >= 1, positive absolute
  /// constants, valid regularity constants.
  void validate() const;
};

/// (2/m) ln(8r/epsilon); zero when r = epsilon/8. Throws if epsilon > 8r.
double recurrence_time(double m, double r, double epsilon);
double recurrence_time(const ProblemParams& params);
double escape_time(const ProblemParams& params);

/// Upper end of the admissible epsilon range, c1 m^2 / (L sqrt(M)).
double theorem1_epsilon_ceiling(const ProblemParams& params);

/// Throws PreconditionError naming the failing inequality unless
/// 0 < epsilon < c1 m^2/(L sqrt M) and epsilon <= 8r.
void require_theorem1_epsilon(const ProblemParams& params);

/// 2M^2 (R^2 + 2 (1 v 1/m)(b + B^2 + d/beta)) + 2B^2. beta may be +inf.
double gradient_moment_G0(const RegularityConstants& k, std::size_t d, double beta);
/// R + (b + d)/m.
double position_moment_G1(const RegularityConstants& k, std::size_t d);

/// Step-size ceiling at a given beta (T_rec term dropped when T_rec = 0).
double eta_ceiling(const ProblemParams& params, double beta);
/// Inverse-temperature floor at a given eta (eta term dropped when T_rec = 0).
double beta_floor(const ProblemParams& params, double eta);

struct AdmissiblePair {
  double eta_max = 0.0;
  double beta_min = 0.0;
  double G0 = 0.0;
  double G1 = 0.0;
  std::size_t iterations = 0;
};

/// Jointly admissible (eta, beta): iterates beta <- beta_floor(eta_ceiling(beta))
/// from beta_floor(1) until both move by at most 1%, then raises beta by 1%
/// and re-checks admissibility. Throws ConvergenceError if no fixpoint is
/// reached. Calls require_theorem1_epsilon first.
AdmissiblePair admissible_eta_beta(const ProblemParams& params);

struct AdmissibilityCheck {
  bool admissible = false;
  double eta_max = 0.0;   // ceiling at the given beta
  double beta_min = 0.0;  // floor at the given eta
  std::string failing;    // empty when admissible
};

AdmissibilityCheck check_admissibility(const ProblemParams& params, double eta, double beta);

/// (128 / (3 epsilon^2)) (d + ln((2MT + 1)/delta)).
double proposition1_beta_threshold(double epsilon, std::size_t d, double M, double T, double delta);
/// (sqrt2 - 1) m^2 / (4 L sqrt(2M)).
double proposition1_epsilon_ceiling(const RegularityConstants& k);
/// Threshold for `params`; throws PreconditionError when epsilon is outside
/// (0, proposition1_epsilon_ceiling) or exceeds 8r.
double proposition1_beta_min(const ProblemParams& params);

struct TailBound {
  double raw = 0.0;
  double clamped = 0.0;
  /// lambda outside (0, 1/2), where the bound is used beyond its stated range.
  bool lambda_warning = false;
};

/// (1/(1-lambda))^{d/2} exp(-(beta lambda / 2)[h^2 - <mu, (I - beta lambda Sigma)^{-1} mu>]).
/// Accepts lambda in (0, 1) and flags lambda >= 1/2. Throws PreconditionError
/// if I - beta lambda Sigma is not positive definite.
TailBound martingale_tail_bound(const Vector& mu, const Matrix& sigma, double beta, double lambda, double h,
                                std::size_t d);

/// mu = H^{1/2} e^{-t1 H} y0 and Sigma = (1/beta)(I - e^{-2 t1 H}) for the OU
/// martingale tail bound.
struct TailMoments {
  Vector mu;
  Matrix sigma;
};
TailMoments tail_bound_moments(const Matrix& H, const Vector& y0, double t1, double beta);

/// det(I - 2 gamma Sigma)^{-1/2} exp(gamma <mu, (I - 2 gamma Sigma)^{-1} mu>) = E exp(gamma ||V||^2)
/// for V ~ N(mu, Sigma). Throws PreconditionError unless I - 2 gamma Sigma is
/// positive definite.
double gaussian_quadratic_mgf(const Vector& mu, const Matrix& sigma, double gamma);

struct CouplingBounds {
  double kl = 0.0;
  double tv_raw = 0.0;
  double tv = 0.0;  // min(tv_raw, 1)
};

/// kl = M^2 (beta G0 / 2 + d) K eta^2, tv = sqrt(kl / 2).
CouplingBounds coupling_bounds(double M, double G0, double beta, std::size_t d, std::size_t K, double eta);
/// Same with G0 evaluated at beta. Requires eta < 1 and eta < m/M^2.
CouplingBounds kl_tv_coupling_bounds(const ProblemParams& params, std::size_t K, double eta, double beta);

/// K0 (16 G1 M^3 eta^2 / eps^2 e^{2 M eta} + 2d exp(-c' beta eps^2 / (M d eta) e^{-2 M eta})).
double event_B_bound(std::size_t K0, double G1, double M, double eta, double epsilon, std::size_t d, double beta,
                     double c_prime);
/// With K0 = ceil(T_rec / eta) and G1 from the constants.
double event_B_bound(const ProblemParams& params, double eta, double beta);
/// Inter-grid oscillation threshold epsilon / (2 sqrt M).
double event_B_threshold(double epsilon, double M);

struct SubgaussianProxies {
  double sigma0 = 0.0;  // A + (B + MR) R
  double sigma1 = 0.0;  // B + MR
  double sigma2 = 0.0;  // C + LR
  double sigma = 0.0;   // max of the three
};
SubgaussianProxies subgaussian_proxies(const RegularityConstants& k);

/// c0 (1 v ln((M v L v (B + MR)) R sigma / delta)).
double deviation_constant(const ProblemParams& params);

/// sigma sqrt(c d ln n / n).
double deviation_threshold_value(double sigma, double c, std::size_t d, std::size_t n);

struct DeviationThreshold {
  double risk = 0.0;
  double grad = 0.0;
  double hess = 0.0;
  double sigma = 0.0;
  double c = 0.0;
};
/// Uniform deviation levels with c = deviation_constant(params). Throws
/// PreconditionError when n < c d ln d or n < 2.
DeviationThreshold deviation_threshold(const ProblemParams& params, std::size_t n);

/// Smallest n >= 2 such that every n' >= n satisfies n' >= c d ln d and
/// n'/ln n' >= c sigma^2 d / floor^2 (floor = eps0 ^ m).
std::size_t theorem2_sample_floor(double c, double sigma, std::size_t d, double floor);
std::size_t theorem2_sample_floor(const ProblemParams& params, double eps0, double m);

struct TheoryBounds {
  double T_rec = 0.0;
  double T_esc = 0.0;
  double eta_max = 0.0;
  double beta_min = 0.0;
  double G0 = 0.0;
  double G1 = 0.0;
  double sigma0 = 0.0;
  double sigma1 = 0.0;
  double sigma2 = 0.0;
  double sigma = 0.0;
  std::size_t K = 0;   // floor(T_esc / eta_max)
  std::size_t K0 = 0;  // ceil(T_rec / eta_max)
  double kl_bound = 0.0;
  double tv_bound_raw = 0.0;
  double tv_bound = 0.0;
  double event_B_bound = 0.0;
  double event_B_threshold = 0.0;
  double proposition1_beta_min = 0.0;
  bool proposition1_epsilon_in_range = false;
  double deviation_c = 0.0;
  std::size_t sample_size_min = 0;
  std::size_t fixpoint_iterations = 0;
};

/// Every closed-form quantity at the admissible pair of admissible_eta_beta.
TheoryBounds compute_theory_bounds(const ProblemParams& params);

struct BoundField {
  std::string key;
  std::string anchor;
  double value = 0.0;
  bool integral = false;
};

/// Fields of `bounds` in print order, each with the statement it comes from.
std::vector<BoundField> describe_bounds(const TheoryBounds& bounds);

/// Window [ceil(eta^{-1} a), floor(eta^{-1} b)] of iteration indices, with a
/// 1e-9 guard against rounding of exact multiples.
std::size_t first_index_at_or_after(double time, double eta);
std::size_t last_index_at_or_before(double time, double eta);

}  // namespace metastab
