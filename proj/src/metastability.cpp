#include "metastab/metastability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "metastab/errors.hpp"
#include "metastab/parallel.hpp"
#include "metastab/rng.hpp"

namespace metastab {

void TubeSpec::validate() const {
  if (H.rows() != H.cols() || H.rows() != center.size() || center.size() == 0) {
    throw PreconditionError("tube: H must be square and match the center");
  }
  if (!(epsilon > 0.0) || !(r > 0.0) || !(m > 0.0)) throw PreconditionError("tube: epsilon, r, m must be > 0");
}

double TubeSpec::radius(double t) const { return epsilon + r * std::exp(-m * t); }

double TubeSpec::ratio(const Vector& w, double t) const { return weighted_norm(w - center, H) / radius(t); }

std::string to_string(EventOutcome outcome) {
  switch (outcome) {
    case EventOutcome::exit_early:
      return "EXIT_EARLY";
    case EventOutcome::stay:
      return "STAY";
    case EventOutcome::violation:
      return "VIOLATION";
  }
  return "UNKNOWN";
}

// ---------------------------------------------------------------------------
// Classification

TubeClassifier::TubeClassifier(const TubeSpec& tube, double eta, double T_rec, double T_esc)
    : tube_(tube),
      diff_(tube.center.size()),
      hdiff_(tube.center.size()),
      pre_end_(last_index_at_or_before(T_rec, eta)),
      post_begin_(first_index_at_or_after(T_rec, eta)),
      post_end_(last_index_at_or_before(T_esc, eta)) {
  tube_.validate();
  if (!(T_rec >= 0.0) || !(T_esc >= T_rec)) throw PreconditionError("tube classifier: requires 0 <= T_rec <= T_esc");
}

bool TubeClassifier::observe(std::size_t k, double t, const Vector& w) {
  if (k > post_end_) return false;
  diff_ = w - tube_.center;
  hdiff_.noalias() = tube_.H * diff_;
  const double ratio = std::sqrt(std::max(0.0, diff_.dot(hdiff_))) / tube_.radius(t);
  if (k <= pre_end_) {
    partial_.max_tube_ratio_pre = std::max(partial_.max_tube_ratio_pre, ratio);
    if (ratio >= 0.5 && !partial_.first_exit_index) partial_.first_exit_index = k;
  }
  if (k >= post_begin_) partial_.max_tube_ratio_post = std::max(partial_.max_tube_ratio_post, ratio);
  if (ratio >= 1.0 && !partial_.tau_estimate) partial_.tau_estimate = t;
  seen_through_ = k;
  any_seen_ = true;
  return k < post_end_;
}

EventClassification TubeClassifier::result() const {
  EventClassification out = partial_;
  if (out.first_exit_index) {
    out.outcome = EventOutcome::exit_early;
  } else if (out.max_tube_ratio_post <= 1.0) {
    out.outcome = EventOutcome::stay;
  } else {
    out.outcome = EventOutcome::violation;
  }
  return out;
}

EventClassification classify_trajectory(const Trajectory& traj, const TubeSpec& tube, double T_rec, double T_esc) {
  if (traj.kind == TrajectoryKind::diffusion_proxy) {
    throw PreconditionError("classify_trajectory: needs a grid trajectory (discrete or exact_ou)");
  }
  const double eta = traj.config.eta;
  TubeClassifier classifier(tube, eta, T_rec, T_esc);
  if (traj.size() == 0 || traj.size() - 1 < classifier.last_index()) {
    throw PreconditionError("classify_trajectory: trajectory too short for floor(T_esc / eta) = " +
                            std::to_string(classifier.last_index()));
  }
  for (std::size_t k = 0; k < traj.size(); ++k) {
    if (!classifier.observe(k, traj.times[k], traj.points.col(static_cast<Eigen::Index>(k)))) break;
  }
  return classifier.result();
}

std::optional<double> estimate_tau(const Trajectory& traj, const TubeSpec& tube) {
  tube.validate();
  for (std::size_t i = 0; i < traj.size(); ++i) {
    if (tube.ratio(traj.points.col(static_cast<Eigen::Index>(i)), traj.times[i]) >= 1.0) return traj.times[i];
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Violation study

ViolationReport run_violation_study(const Landscape& landscape, const LocalMinimum& minimum,
                                    const ProblemParams& params, const ViolationStudyOptions& options) {
  params.validate();
  if (options.replicas == 0) throw PreconditionError("violation study: replicas must be >= 1");
  const auto& k = params.constants;
  TubeSpec tube{minimum.location, minimum.hessian, params.epsilon, params.r, k.m};
  tube.validate();

  ViolationReport report;
  report.seed = options.seed;
  report.replicas = options.replicas;
  report.delta = params.delta;
  report.noiseless = options.noiseless;
  report.T_rec = recurrence_time(params);
  report.T_esc = report.T_rec + params.T;

  if (options.eta && (options.beta || options.noiseless)) {
    report.eta = *options.eta;
    report.beta = options.noiseless ? std::numeric_limits<double>::infinity() : *options.beta;
  } else {
    const AdmissiblePair pair = admissible_eta_beta(params);
    report.eta = options.eta.value_or(pair.eta_max);
    report.beta = options.noiseless ? std::numeric_limits<double>::infinity() : options.beta.value_or(pair.beta_min);
  }
  try {
    require_theorem1_epsilon(params);
    const AdmissibilityCheck check = check_admissibility(params, report.eta, report.beta);
    report.admissible = check.admissible;
    report.admissibility_note = check.failing;
  } catch (const PreconditionError& e) {
    report.admissible = false;
    report.admissibility_note = e.what();
  }
  if (!report.admissible) {
    if (!options.override_admissibility) {
      throw PreconditionError("violation study: inadmissible (eta, beta): " + report.admissibility_note);
    }
    report.overridden = true;
  }

  if (options.initial_point) {
    report.initial_point = *options.initial_point;
  } else {
    const SymmetricEigen eig(minimum.hessian);
    Vector w = minimum.location;
    w(0) += params.r / std::sqrt(eig.values(eig.values.size() - 1));
    const double norm = w.norm();
    if (norm > k.R) w *= (k.R > 0.0 ? k.R / norm : 0.0);
    report.initial_point = w;
  }
  report.initial_tube_ratio = tube.ratio(report.initial_point, 0.0);
  report.horizon_K = std::max<std::size_t>(1, last_index_at_or_before(report.T_esc, report.eta));

  LangevinConfig base;
  base.eta = report.eta;
  base.beta = options.noiseless ? 1.0 : report.beta;
  base.noiseless = options.noiseless;
  base.horizon_K = report.horizon_K;
  base.initial_point = report.initial_point;
  base.validate(landscape.dimension());

  report.classifications.resize(options.replicas);
  parallel_for(
      options.replicas,
      [&](std::size_t i) {
        LangevinConfig config = base;
        config.seed = derive_seed(options.seed, i);
        TubeClassifier classifier(tube, report.eta, report.T_rec, report.T_esc);
        try {
          stream_discrete_langevin(landscape, config, [&](std::size_t idx, double t, const Vector& w) {
            return classifier.observe(idx, t, w);
          });
        } catch (const DivergenceError& e) {
          throw DivergenceError(e.index(), "replica " + std::to_string(i) + ": " + e.what(), i);
        }
        report.classifications[i] = classifier.result();
      },
      options.workers);

  for (const auto& c : report.classifications) {
    switch (c.outcome) {
      case EventOutcome::exit_early:
        ++report.exit_early;
        break;
      case EventOutcome::stay:
        ++report.stay;
        break;
      case EventOutcome::violation:
        ++report.violation;
        break;
    }
  }
  report.violation_fraction = static_cast<double>(report.violation) / static_cast<double>(options.replicas);
  report.violation_ci = wilson_interval(report.violation, options.replicas);
  return report;
}

// ---------------------------------------------------------------------------
// Escape-time sweep

EscapeStats escape_time_sweep(const Landscape& landscape, const LocalMinimum& minimum,
                              const EscapeSweepOptions& options) {
  if (options.betas.empty()) throw PreconditionError("escape sweep: betas must be nonempty");
  for (std::size_t i = 0; i < options.betas.size(); ++i) {
    if (!(options.betas[i] > 0.0)) throw PreconditionError("escape sweep: betas must be > 0");
    if (i > 0 && !(options.betas[i] > options.betas[i - 1])) {
      throw PreconditionError("escape sweep: betas must be strictly increasing");
    }
  }
  if (landscape.family() != "double_well") throw PreconditionError("escape sweep: needs a double-well landscape");
  const double side = minimum.location(0);
  if (side == 0.0) throw PreconditionError("escape sweep: minimum lies on the separating hyperplane");
  if (!(options.eta > 0.0) || options.budget_K == 0 || options.replicas == 0) {
    throw PreconditionError("escape sweep: eta, budget_K and replicas must be positive");
  }
  const double sign = side > 0.0 ? 1.0 : -1.0;

  EscapeStats stats;
  stats.betas = options.betas;
  stats.eta = options.eta;
  stats.budget_K = options.budget_K;
  const std::size_t nb = options.betas.size();
  stats.samples.resize(nb * options.replicas);

  parallel_for(
      stats.samples.size(),
      [&](std::size_t job) {
        const std::size_t b = job / options.replicas;
        const std::size_t i = job % options.replicas;
        LangevinConfig config;
        config.eta = options.eta;
        config.beta = options.betas[b];
        config.horizon_K = options.budget_K;
        config.initial_point = minimum.location;
        config.seed = derive_seed(derive_seed(options.seed, b), i);
        config.noise_substeps = options.noise_substeps;
        std::optional<std::size_t> hit;
        stream_discrete_langevin(landscape, config, [&](std::size_t idx, double, const Vector& w) {
          if (idx > 0 && sign * w(0) <= 0.0) {
            hit = idx;
            return false;
          }
          return true;
        });
        EscapeSample& s = stats.samples[job];
        s.beta = options.betas[b];
        s.replica = i;
        s.censored = !hit.has_value();
        s.escape_time = static_cast<double>(hit.value_or(options.budget_K)) * options.eta;
      },
      options.workers);

  std::vector<double> fit_x, fit_y;
  for (std::size_t b = 0; b < nb; ++b) {
    std::vector<double> times;
    for (std::size_t i = 0; i < options.replicas; ++i) {
      const auto& s = stats.samples[b * options.replicas + i];
      if (!s.censored) times.push_back(s.escape_time);
    }
    const MeanEstimate est = mean_with_error(times);
    const bool none = times.empty();
    stats.replica_counts.push_back(options.replicas);
    stats.uncensored_counts.push_back(times.size());
    stats.censoring_fraction.push_back(1.0 - static_cast<double>(times.size()) /
                                                 static_cast<double>(options.replicas));
    stats.fully_censored.push_back(none);
    stats.mean_escape.push_back(none ? std::numeric_limits<double>::quiet_NaN() : est.mean);
    stats.mean_escape_se.push_back(none ? std::numeric_limits<double>::quiet_NaN() : est.standard_error);
    stats.log_mean_escape.push_back(none ? std::numeric_limits<double>::quiet_NaN() : std::log(est.mean));
    if (!none) {
      fit_x.push_back(options.betas[b]);
      fit_y.push_back(std::log(est.mean));
    }
  }
  if (fit_x.size() >= 2) stats.regression = fit_line(fit_x, fit_y);
  return stats;
}

// ---------------------------------------------------------------------------
// Inter-grid oscillation

OscillationReport interstep_oscillation_check(const Trajectory& traj, const ProblemParams& params) {
  if (traj.kind != TrajectoryKind::diffusion_proxy) {
    throw PreconditionError("oscillation check: needs a diffusion-proxy trajectory");
  }
  if (traj.substep_factor < 4) throw PreconditionError("oscillation check: substep resolution too coarse (need >= 4)");
  params.validate();
  const auto& k = params.constants;
  const std::size_t s = traj.substep_factor;
  const std::size_t intervals = (traj.size() - 1) / s;
  if (intervals == 0) throw PreconditionError("oscillation check: trajectory shorter than one grid interval");

  OscillationReport report;
  report.intervals = intervals;
  report.threshold = event_B_threshold(params.epsilon, k.M);
  const double beta = traj.config.noiseless ? std::numeric_limits<double>::infinity() : traj.config.beta;
  report.per_interval_bound = event_B_bound(1, position_moment_G1(k, params.d), k.M, traj.config.eta, params.epsilon,
                                            params.d, beta, params.c_prime);
  std::vector<double> sup(intervals, 0.0);
  for (std::size_t j = 0; j < intervals; ++j) {
    const auto end = traj.points.col(static_cast<Eigen::Index>((j + 1) * s));
    for (std::size_t i = j * s; i < (j + 1) * s; ++i) {
      sup[j] = std::max(sup[j], (traj.points.col(static_cast<Eigen::Index>(i)) - end).norm());
    }
    if (sup[j] > report.threshold) ++report.violations;
  }
  report.fraction = static_cast<double>(report.violations) / static_cast<double>(intervals);
  report.fraction_ci = wilson_interval(report.violations, intervals);
  report.max_oscillation = *std::max_element(sup.begin(), sup.end());
  report.median_oscillation = quantile(sup, 0.5);
  report.q90_oscillation = quantile(sup, 0.9);
  report.q99_oscillation = quantile(sup, 0.99);
  report.consistent = report.fraction_ci.lower <= report.per_interval_bound;
  return report;
}

}  // namespace metastab
