#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "metastab/dynamics.hpp"
#include "metastab/landscape.hpp"
#include "metastab/theory.hpp"

namespace metastab {

enum class VerdictStatus { pass, fail, inconclusive };
std::string to_string(VerdictStatus status);

/// One checked comparison inside an oracle.
struct OracleCase {
  std::string label;
  double statistic = 0.0;
  double threshold = 0.0;
  std::optional<double> standard_error;
  bool pass = false;
  std::string note;
};

struct OracleVerdict {
  std::string name;
  VerdictStatus status = VerdictStatus::fail;
  double statistic = 0.0;
  double threshold = 0.0;
  std::optional<double> standard_error;
  std::uint64_t seed = 0;
  std::size_t sample_count = 0;
  std::vector<OracleCase> cases;
  std::vector<std::string> notes;
};

// ---------------------------------------------------------------------------
// Gaussian quadratic MGF

struct MgfCase {
  std::string label;
  Vector mu;
  Matrix sigma;
  double gamma = 0.0;
};

/// gamma = 0, (mu = 0, Sigma = 1, gamma = 1/4) and three cases with
/// I - 4 gamma Sigma positive definite (finite Monte Carlo variance).
std::vector<MgfCase> default_mgf_cases();

/// Monte Carlo mean of exp(gamma ||V||^2) against the closed form for every
/// case (case i seeded with derive_seed(seed, i)). PASS iff every
/// |MC - closed| / SE <= 3; a zero SE requires exact equality.
OracleVerdict verify_gaussian_mgf(std::size_t trials, std::uint64_t seed,
                                  const std::vector<MgfCase>& cases = default_mgf_cases());

// ---------------------------------------------------------------------------
// Martingale tail bound

struct MartingaleTailSetup {
  Matrix H;
  double beta = 10.0;
  Vector y0;
  double t0 = 0.5;
  double t1 = 1.0;
  /// Empty: eight levels where the lambda-optimized bound equals
  /// 1, 0.5, 0.25, 0.1, 0.05, 0.02, 0.01, 0.005.
  std::vector<double> h_grid;
  std::size_t replicas = 10000;
  /// Coarse grid resolution over [t0, t1]; the fine grid doubles it.
  std::size_t substeps = 256;
  std::size_t lambda_points = 49;
  /// Largest tolerated |tail(fine) - tail(coarse)|.
  double refinement_tolerance = 0.02;
};

/// Three reference settings (d = 2, 2, 3).
std::vector<MartingaleTailSetup> default_martingale_setups();

/// Bound minimized over lambda in an interior grid of (0, 1/2).
double optimized_tail_bound(const TailMoments& moments, double beta, double h, std::size_t d,
                            std::size_t lambda_points = 49);

/// Simulates Q_{t0}(t1) Z0_t exactly on nested grids (Gaussian increments
/// with exact covariances in the eigenbasis of H) and compares the one-sided
/// 95% Wilson upper bound of P[sup ||Q Z0_t|| >= h] with the analytic bound.
/// FAIL if an empirical tail exceeds its bound; INCONCLUSIVE if only the
/// upper confidence bound does, or if the grid refinement moves a tail
/// estimate by more than the tolerance.
OracleVerdict verify_martingale_tail(const MartingaleTailSetup& setup, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Uniform deviation scaling

struct DeviationScalingSetup {
  std::vector<std::size_t> n_grid{100, 400, 1600, 6400};
  std::size_t grid_resolution = 21;
  std::size_t dataset_replicas = 200;
  double quantile_level = 0.9;
  double target_slope = -0.5;
  double slope_tolerance = 0.1;
  /// Datasets for smaller n are prefixes of the largest one.
  bool nested = true;
};

struct DeviationLevel {
  std::string level;  // risk | gradient | hessian
  std::vector<double> quantiles;
  double slope = 0.0;
  double r_squared = 0.0;
  bool degenerate = false;
  bool pass = false;
};

struct DeviationScalingResult {
  OracleVerdict verdict;
  std::vector<DeviationLevel> levels;
};

/// Grid sup over B(R) of |F_Z - F|, ||grad F_Z - grad F|| and
/// ||hess F_Z - hess F||_2, the quantile_level quantile over dataset
/// replicas per n, and the slope of log quantile against log(n / ln n).
/// A level that is identically zero is a degenerate PASS. Requires d <= 2
/// and at least four sample sizes.
DeviationScalingResult verify_uniform_deviation_scaling(const ErmFamily& family, const DeviationScalingSetup& setup,
                                                        std::uint64_t seed);

// ---------------------------------------------------------------------------
// Strongly Morse transfer

struct MorseTransferSetup {
  double eps0 = 0.1;
  double m = 0.5;
  double delta = 0.1;
  /// Sample size; 0 means floor_multiplier * theorem2_sample_floor.
  std::size_t n = 0;
  double floor_multiplier = 1.0;
  /// Constants c0 etc. used for the floor.
  ProblemParams params;
  std::size_t dataset_replicas = 200;
  std::size_t grid_resolution = 101;
};

/// Certifies the population risk (2 eps0, 2 m)-strongly Morse, then counts
/// dataset replicas whose empirical risk is (eps0, m)-strongly Morse.
/// PASS iff the fraction >= 1 - delta - (Wilson half-width). Throws
/// PreconditionError when the population certificate fails or d > 2.
OracleVerdict verify_strongly_morse_transfer(const ErmFamily& family, const MorseTransferSetup& setup,
                                             std::uint64_t seed);

// ---------------------------------------------------------------------------
// A-posteriori risk bound

struct AposterioriSetup {
  ProblemParams params;
  std::size_t n = 2000;
  std::size_t dataset_replicas = 100;
  /// Explicit (eta, beta); the admissible pair otherwise.
  std::optional<double> eta;
  std::optional<double> beta;
  bool noiseless = false;
  /// Start at the empirical minimizer instead of the canonical tube point.
  bool start_at_minimum = false;
};

struct AposterioriReplica {
  bool retained = false;
  bool holds = false;
  bool stay_2eps = false;
  double E1 = 0.0;
  double E2 = 0.0;
  double threshold = 0.0;
};

struct AposterioriResult {
  OracleVerdict verdict;
  std::vector<AposterioriReplica> replicas;
  std::size_t retained = 0;
  std::size_t holds = 0;
  std::size_t e2_assertions = 0;
  std::size_t e2_violations = 0;
  double eta = 0.0;
  double beta = 0.0;
  std::size_t horizon_K = 0;
};

/// Per replica: minimize F_Z, run the Langevin algorithm, drop replicas with
/// ||W_k - wbar||_H >= 2 eps for some k <= T_rec/eta, and test
/// F(wbar) <= min_{window} F_Z(W_k) + sigma sqrt(c d ln n / n) with c = params.c.
/// E1 = F(wbar) - F_Z(wbar) and E2 = F_Z(wbar) - min F_Z(W_k) are logged;
/// E2 <= 0 is asserted whenever every window iterate stays within 2 eps and
/// eps <= 3 m^{3/2} / (2L). PASS iff no assertion fails and the holding
/// fraction >= 1 - delta - (Wilson half-width).
AposterioriResult verify_aposteriori_bound(const ErmFamily& family, const AposterioriSetup& setup,
                                           std::uint64_t seed);

}  // namespace metastab
