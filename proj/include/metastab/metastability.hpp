#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "metastab/dynamics.hpp"
#include "metastab/landscape.hpp"
#include "metastab/stats.hpp"
#include "metastab/theory.hpp"

namespace metastab {

/// Shrinking tube {w : ||w - center||_H <= epsilon + r e^{-m t}}.
struct TubeSpec {
  Vector center;
  Matrix H;
  double epsilon = 0.0;
  double r = 0.0;
  double m = 0.0;

  void validate() const;
  double radius(double t) const;
  /// ||w - center||_H / radius(t).
  double ratio(const Vector& w, double t) const;
};

enum class EventOutcome { exit_early, stay, violation };
std::string to_string(EventOutcome outcome);

struct EventClassification {
  EventOutcome outcome = EventOutcome::stay;
  std::optional<std::size_t> first_exit_index;
  std::optional<double> tau_estimate;
  double max_tube_ratio_pre = 0.0;
  double max_tube_ratio_post = 0.0;
};

/// Streaming classifier over iterates k = 0, 1, ... of a grid trajectory.
///   pre window:  k <= T_rec / eta, EXIT_EARLY if some ratio >= 1/2
///   post window: T_rec / eta <= k <= T_esc / eta, STAY if every ratio <= 1
/// Iterates beyond floor(T_esc / eta) are ignored.
class TubeClassifier {
 public:
  TubeClassifier(const TubeSpec& tube, double eta, double T_rec, double T_esc);

  /// Feeds iterate k at time t. Returns false once the window is complete.
  bool observe(std::size_t k, double t, const Vector& w);
  /// Last index the classification depends on.
  std::size_t last_index() const { return post_end_; }
  bool complete() const { return seen_through_ >= post_end_ && any_seen_; }
  EventClassification result() const;

 private:
  TubeSpec tube_;
  Vector diff_;
  Vector hdiff_;
  std::size_t pre_end_;
  std::size_t post_begin_;
  std::size_t post_end_;
  std::size_t seen_through_ = 0;
  bool any_seen_ = false;
  EventClassification partial_;
};

/// Classifies a discrete (or exact OU) trajectory. Throws PreconditionError
/// for diffusion-proxy input or when the trajectory stops before
/// floor(T_esc / eta).
EventClassification classify_trajectory(const Trajectory& traj, const TubeSpec& tube, double T_rec, double T_esc);

/// First recorded time whose tube ratio reaches 1; nullopt if censored.
std::optional<double> estimate_tau(const Trajectory& traj, const TubeSpec& tube);

struct ViolationStudyOptions {
  std::size_t replicas = 500;
  std::uint64_t seed = 0;
  /// Explicit (eta, beta); the admissible pair of the theory module otherwise.
  std::optional<double> eta;
  std::optional<double> beta;
  bool noiseless = false;
  bool override_admissibility = false;
  /// Defaults to center + (r / sqrt(lambda_max(H))) e_1 projected into B(R).
  std::optional<Vector> initial_point;
  std::size_t workers = 0;
};

struct ViolationReport {
  double eta = 0.0;
  double beta = 0.0;
  bool noiseless = false;
  bool admissible = false;
  bool overridden = false;
  std::string admissibility_note;
  Vector initial_point;
  double initial_tube_ratio = 0.0;
  double T_rec = 0.0;
  double T_esc = 0.0;
  std::size_t horizon_K = 0;
  std::size_t replicas = 0;
  std::uint64_t seed = 0;
  std::size_t exit_early = 0;
  std::size_t stay = 0;
  std::size_t violation = 0;
  double delta = 0.0;
  double violation_fraction = 0.0;
  Interval violation_ci;
  std::vector<EventClassification> classifications;
};

/// Runs independent discrete trajectories (replica i seeded with
/// derive_seed(seed, i)) and classifies each one. Throws PreconditionError if
/// (eta, beta) is inadmissible and not overridden.
ViolationReport run_violation_study(const Landscape& landscape, const LocalMinimum& minimum,
                                    const ProblemParams& params, const ViolationStudyOptions& options);

struct EscapeSweepOptions {
  std::vector<double> betas;
  double eta = 0.01;
  std::size_t budget_K = 1000000;
  std::size_t replicas = 200;
  std::uint64_t seed = 0;
  std::uint32_t noise_substeps = 1;
  std::size_t workers = 0;
};

struct EscapeSample {
  double beta = 0.0;
  std::size_t replica = 0;
  double escape_time = 0.0;  // budget_K * eta when censored
  bool censored = false;
};

struct EscapeStats {
  std::vector<double> betas;
  std::vector<double> mean_escape;      // over uncensored replicas; NaN if none
  std::vector<double> mean_escape_se;
  std::vector<double> log_mean_escape;
  std::vector<std::size_t> replica_counts;
  std::vector<std::size_t> uncensored_counts;
  std::vector<double> censoring_fraction;
  std::vector<bool> fully_censored;
  std::optional<LinearFit> regression;  // log mean escape vs beta over betas with an escape
  std::vector<EscapeSample> samples;
  double eta = 0.0;
  std::size_t budget_K = 0;
};

/// Per beta, first time k eta at which w_1 crosses the separating hyperplane
/// {w_1 = 0} away from the basin of `minimum` (start at the minimum).
EscapeStats escape_time_sweep(const Landscape& landscape, const LocalMinimum& minimum,
                              const EscapeSweepOptions& options);

struct OscillationReport {
  std::size_t intervals = 0;
  std::size_t violations = 0;
  double fraction = 0.0;
  Interval fraction_ci;
  double threshold = 0.0;          // epsilon / (2 sqrt M)
  double per_interval_bound = 0.0;  // event-B bound with K0 = 1
  double max_oscillation = 0.0;
  double median_oscillation = 0.0;
  double q90_oscillation = 0.0;
  double q99_oscillation = 0.0;
  /// Wilson lower bound of the violation fraction <= per-interval bound.
  bool consistent = false;
};

/// Per grid interval [t_k, t_{k+1}], sup over recorded substeps of
/// ||W_t - W_{t_{k+1}}||. Needs a diffusion-proxy trajectory with
/// substep_factor >= 4; eta and beta are taken from its config.
OscillationReport interstep_oscillation_check(const Trajectory& traj, const ProblemParams& params);

}  // namespace metastab
