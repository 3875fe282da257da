#include "metastab/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "metastab/errors.hpp"
#include "metastab/metastability.hpp"
#include "metastab/parallel.hpp"
#include "metastab/rng.hpp"
#include "metastab/trajectory_io.hpp"

namespace metastab {

using Json = nlohmann::ordered_json;

namespace {

Json jnum(double x) {
  if (std::isnan(x)) return nullptr;
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

Json jvec(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(jnum(v(i)));
  return a;
}

std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(10) << x;
  return os.str();
}

bool wants(const ExperimentConfig& config, const std::string& format) {
  const auto& f = config.output.formats;
  return std::find(f.begin(), f.end(), format) != f.end();
}

Json constants_json(const RegularityConstants& k) {
  Json j;
  j["A"] = k.A;
  j["B"] = k.B;
  j["C"] = k.C;
  j["M"] = k.M;
  j["L"] = k.L;
  j["m"] = k.m;
  j["b"] = k.b;
  j["R"] = k.R;
  return j;
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

/// Writes files into one directory and records them in a manifest.
class OutputWriter {
 public:
  OutputWriter(std::string dir, std::string command, const ExperimentConfig* config, std::uint64_t seed)
      : dir_(std::move(dir)) {
    manifest_.command = std::move(command);
    manifest_.tool_version = METASTAB_VERSION;
    manifest_.seed = seed;
    if (config) manifest_.config_hash = fnv1a64(serialize_config(*config));
  }

  void emit(const std::string& name, const std::string& content) {
    const std::filesystem::path path = std::filesystem::path(dir_) / name;
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary);
    if (out) out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out || !out.flush()) abort_with("cannot write " + path.string());
    manifest_.outputs.push_back({name, fnv1a64(content), content.size()});
  }

  void time(const std::string& name, double seconds) { manifest_.timings.emplace_back(name, seconds); }

  void finish() { write_manifest(); }

  const RunManifest& manifest() const { return manifest_; }

 private:
  [[noreturn]] void abort_with(const std::string& what) {
    manifest_.complete = false;
    manifest_.error = what;
    try {
      write_manifest();
    } catch (...) {
    }
    throw std::runtime_error(what);
  }

  void write_manifest() {
    const std::filesystem::path path = std::filesystem::path(dir_) / "manifest.json";
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary);
    out << manifest_.to_json();
    if (!out) throw std::runtime_error("cannot write " + path.string());
  }

  std::string dir_;
  RunManifest manifest_;
};

struct StepChoice {
  double eta = 0.0;
  double beta = 0.0;
  bool noiseless = false;
  bool admissible = false;
  bool overridden = false;
  std::string note;
  double T_rec = 0.0;
  double T_esc = 0.0;
  std::size_t horizon_K = 1;
  Vector initial_point;
};

StepChoice choose_steps(const ProblemParams& params, const RunSpec& run, const LocalMinimum& minimum) {
  StepChoice s;
  s.noiseless = run.noiseless;
  s.T_rec = recurrence_time(params);
  s.T_esc = s.T_rec + params.T;
  if (run.eta && (run.beta || run.noiseless)) {
    s.eta = *run.eta;
    s.beta = run.noiseless ? std::numeric_limits<double>::infinity() : *run.beta;
  } else {
    const AdmissiblePair pair = admissible_eta_beta(params);
    s.eta = run.eta.value_or(pair.eta_max);
    s.beta = run.noiseless ? std::numeric_limits<double>::infinity() : run.beta.value_or(pair.beta_min);
  }
  try {
    require_theorem1_epsilon(params);
    const AdmissibilityCheck check = check_admissibility(params, s.eta, s.beta);
    s.admissible = check.admissible;
    s.note = check.failing;
  } catch (const PreconditionError& e) {
    s.note = e.what();
  }
  if (!s.admissible) {
    if (!run.override_admissibility) throw PreconditionError("inadmissible (eta, beta): " + s.note);
    s.overridden = true;
  }
  if (run.initial_point) {
    s.initial_point = *run.initial_point;
  } else {
    const SymmetricEigen eig(minimum.hessian);
    s.initial_point = minimum.location;
    s.initial_point(0) += params.r / std::sqrt(eig.values(eig.values.size() - 1));
    const double norm = s.initial_point.norm();
    const double R = params.constants.R;
    if (norm > R) s.initial_point *= (R > 0.0 ? R / norm : 0.0);
  }
  s.horizon_K = std::max<std::size_t>(1, last_index_at_or_before(s.T_esc, s.eta));
  return s;
}

LangevinConfig langevin_config(const StepChoice& s, const RunSpec& run, std::size_t replica) {
  LangevinConfig c;
  c.eta = s.eta;
  c.beta = s.noiseless ? 1.0 : s.beta;
  c.noiseless = s.noiseless;
  c.horizon_K = s.horizon_K;
  c.initial_point = s.initial_point;
  c.seed = derive_seed(run.seed, replica);
  c.noise_substeps = run.noise_substeps;
  return c;
}

Json classification_json(const EventClassification& c) {
  Json j;
  j["outcome"] = to_string(c.outcome);
  j["first_exit_index"] = c.first_exit_index ? Json(*c.first_exit_index) : Json(nullptr);
  j["tau_estimate"] = c.tau_estimate ? jnum(*c.tau_estimate) : Json(nullptr);
  j["max_tube_ratio_pre"] = jnum(c.max_tube_ratio_pre);
  j["max_tube_ratio_post"] = jnum(c.max_tube_ratio_post);
  return j;
}

std::string classifications_csv(const std::vector<EventClassification>& cs) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "replica,outcome,first_exit_index,tau_estimate,max_tube_ratio_pre,max_tube_ratio_post\n";
  for (std::size_t i = 0; i < cs.size(); ++i) {
    const auto& c = cs[i];
    os << i << ',' << to_string(c.outcome) << ',';
    if (c.first_exit_index) os << *c.first_exit_index;
    os << ',';
    if (c.tau_estimate) os << *c.tau_estimate;
    os << ',' << c.max_tube_ratio_pre << ',' << c.max_tube_ratio_post << '\n';
  }
  return os.str();
}

std::string markdown_summary(const std::string& title, const std::vector<std::pair<std::string, std::string>>& rows) {
  std::ostringstream os;
  os << "# " << title << "\n\n| field | value |\n|---|---|\n";
  for (const auto& [k, v] : rows) os << "| " << k << " | " << v << " |\n";
  return os.str();
}

std::string trajectory_bytes(const Trajectory& traj, const std::string& format) {
  std::ostringstream os(std::ios::binary);
  if (format == "binary") {
    write_trajectory_binary(traj, os);
  } else {
    write_trajectory_csv(traj, os);
  }
  return os.str();
}

std::string trajectory_name(std::size_t i, const std::string& format) {
  return "trajectories/replica_" + std::to_string(i) + (format == "binary" ? ".bin" : ".csv");
}

OracleVerdict combine(const std::string& name, std::uint64_t seed,
                      const std::vector<std::pair<std::string, OracleVerdict>>& parts) {
  OracleVerdict v;
  v.name = name;
  v.seed = seed;
  v.status = VerdictStatus::pass;
  v.statistic = -std::numeric_limits<double>::infinity();
  for (const auto& [prefix, p] : parts) {
    if (p.status == VerdictStatus::fail) {
      v.status = VerdictStatus::fail;
    } else if (p.status == VerdictStatus::inconclusive && v.status == VerdictStatus::pass) {
      v.status = VerdictStatus::inconclusive;
    }
    if (p.statistic > v.statistic) {
      v.statistic = p.statistic;
      v.standard_error = p.standard_error;
    }
    v.threshold = p.threshold;
    v.sample_count += p.sample_count;
    for (auto c : p.cases) {
      c.label = prefix + ": " + c.label;
      v.cases.push_back(c);
    }
    for (const auto& n : p.notes) v.notes.push_back(prefix + ": " + n);
  }
  return v;
}

int fail_or_ok(bool ok) { return ok ? kExitOk : kExitFailure; }

}  // namespace

std::string resolve_output_directory(const std::optional<std::string>& flag, const std::string& configured) {
  if (flag) return *flag;
  if (const char* env = std::getenv("METASTAB_OUT_DIR"); env && *env) return env;
  return configured;
}

// ---------------------------------------------------------------------------
// bounds

int cmd_bounds(const ExperimentConfig& config, const CommandContext& ctx) {
  const BuiltLandscape built = build_landscape(config);
  const ProblemParams& params = built.params;
  const TheoryBounds bounds = compute_theory_bounds(params);
  const auto fields = describe_bounds(bounds);
  std::ostream& out = *ctx.out;

  if (ctx.format == "csv") {
    out << "key,value,anchor\n" << std::setprecision(17);
    for (const auto& f : fields) out << f.key << ',' << f.value << ",\"" << f.anchor << "\"\n";
    return kExitOk;
  }
  if (ctx.format == "md") {
    out << "| key | value | anchor |\n|---|---|---|\n";
    for (const auto& f : fields) out << "| " << f.key << " | " << fmt(f.value) << " | " << f.anchor << " |\n";
    return kExitOk;
  }

  Json j;
  j["family"] = config.landscape.family;
  j["dimension"] = params.d;
  j["constants"] = constants_json(params.constants);
  Json p;
  p["epsilon"] = params.epsilon;
  p["delta"] = params.delta;
  p["r"] = params.r;
  p["T"] = params.T;
  p["eps0"] = params.eps0;
  p["c1"] = params.c1;
  p["c2"] = params.c2;
  p["c"] = params.c;
  p["c0"] = params.c0;
  p["c_prime"] = params.c_prime;
  p["c_reflection"] = params.c_reflection;
  j["params"] = p;
  Json b;
  for (const auto& f : fields) {
    if (f.key == "proposition1_epsilon_in_range") {
      b[f.key] = f.value != 0.0;
    } else if (f.integral) {
      b[f.key] = static_cast<std::uint64_t>(f.value);
    } else {
      b[f.key] = jnum(f.value);
    }
  }
  j["bounds"] = b;
  Json anchors;
  for (const auto& f : fields) anchors[f.key] = f.anchor;
  j["anchors"] = anchors;
  out << j.dump(2) << "\n\n";

  std::size_t key_w = 3, val_w = 5;
  std::vector<std::string> values;
  for (const auto& f : fields) {
    values.push_back(f.integral ? std::to_string(static_cast<std::uint64_t>(f.value)) : fmt(f.value));
    key_w = std::max(key_w, f.key.size());
    val_w = std::max(val_w, values.back().size());
  }
  out << std::left << std::setw(static_cast<int>(key_w)) << "key" << "  " << std::right
      << std::setw(static_cast<int>(val_w)) << "value" << "  anchor\n";
  for (std::size_t i = 0; i < fields.size(); ++i) {
    out << std::left << std::setw(static_cast<int>(key_w)) << fields[i].key << "  " << std::right
        << std::setw(static_cast<int>(val_w)) << values[i] << "  " << fields[i].anchor << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// simulate

int cmd_simulate(const ExperimentConfig& config, const CommandContext& ctx) {
  const auto start = Clock::now();
  const BuiltLandscape built = build_landscape(config);
  const Landscape& landscape = *built.landscape;
  const ProblemParams& params = built.params;
  const RunSpec& run = config.run;
  const LocalMinimum minimum = find_local_minimum(landscape, default_minimum_start(config, params.d));
  const StepChoice steps = choose_steps(params, run, minimum);
  OutputWriter writer(ctx.out_dir, "simulate", &config, run.seed);
  writer.time("setup", seconds_since(start));
  if (built.dataset) {
    std::ostringstream os;
    os << std::setprecision(17) << "z_1";
    for (Eigen::Index j = 1; j < built.dataset->samples.cols(); ++j) os << ",z_" << j + 1;
    os << '\n';
    for (Eigen::Index i = 0; i < built.dataset->samples.rows(); ++i) {
      for (Eigen::Index j = 0; j < built.dataset->samples.cols(); ++j) {
        os << (j ? "," : "") << built.dataset->samples(i, j);
      }
      os << '\n';
    }
    if (wants(config, "csv")) writer.emit("dataset.csv", os.str());
  }

  Json report;
  report["kind"] = run.kind;
  report["family"] = config.landscape.family;
  report["eta"] = jnum(steps.eta);
  report["beta"] = jnum(steps.beta);
  report["noiseless"] = steps.noiseless;
  report["admissible"] = steps.admissible;
  report["overridden"] = steps.overridden;
  report["admissibility_note"] = steps.note;
  report["minimum"] = jvec(minimum.location);
  report["initial_point"] = jvec(steps.initial_point);
  report["T_rec"] = jnum(steps.T_rec);
  report["T_esc"] = jnum(steps.T_esc);
  report["horizon_K"] = steps.horizon_K;
  report["replicas"] = run.replicas;
  report["seed"] = run.seed;
  std::vector<std::pair<std::string, std::string>> md;

  const auto sim_start = Clock::now();
  if (run.kind == "discrete" || run.kind == "exact_ou") {
    std::vector<EventClassification> cs;
    if (run.kind == "discrete") {
      ViolationStudyOptions opts;
      opts.replicas = run.replicas;
      opts.seed = run.seed;
      opts.eta = steps.eta;
      if (!steps.noiseless) opts.beta = steps.beta;
      opts.noiseless = steps.noiseless;
      opts.override_admissibility = run.override_admissibility;
      opts.initial_point = steps.initial_point;
      opts.workers = ctx.workers ? ctx.workers : run.workers;
      const ViolationReport vr = run_violation_study(landscape, minimum, params, opts);
      cs = vr.classifications;
    } else {
      const OULinearization lin = OULinearization::from_minimum(minimum);
      TubeSpec tube{minimum.location, minimum.hessian, params.epsilon, params.r, params.constants.m};
      tube.validate();
      cs.resize(run.replicas);
      parallel_for(
          run.replicas,
          [&](std::size_t i) {
            TubeClassifier classifier(tube, steps.eta, steps.T_rec, steps.T_esc);
            try {
              stream_exact_ou(lin, langevin_config(steps, run, i), [&](std::size_t k, double t, const Vector& w) {
                return classifier.observe(k, t, w);
              });
            } catch (const DivergenceError& e) {
              throw DivergenceError(e.index(), "replica " + std::to_string(i) + ": " + e.what(), i);
            }
            cs[i] = classifier.result();
          },
          ctx.workers ? ctx.workers : run.workers);
    }
    std::size_t counts[3] = {0, 0, 0};
    for (const auto& c : cs) ++counts[static_cast<int>(c.outcome)];
    const Interval ci = wilson_interval(counts[2], cs.size());
    report["exit_early"] = counts[0];
    report["stay"] = counts[1];
    report["violation"] = counts[2];
    report["delta"] = params.delta;
    report["violation_fraction"] = static_cast<double>(counts[2]) / static_cast<double>(cs.size());
    report["violation_ci95"] = {ci.lower, ci.upper};
    Json arr = Json::array();
    for (const auto& c : cs) arr.push_back(classification_json(c));
    report["classifications"] = arr;
    md = {{"kind", run.kind},
          {"eta", fmt(steps.eta)},
          {"beta", fmt(steps.beta)},
          {"admissible", steps.admissible ? "yes" : (steps.overridden ? "no (overridden)" : "no")},
          {"replicas", std::to_string(cs.size())},
          {"EXIT_EARLY", std::to_string(counts[0])},
          {"STAY", std::to_string(counts[1])},
          {"VIOLATION", std::to_string(counts[2])},
          {"violation 95% CI", "[" + fmt(ci.lower) + ", " + fmt(ci.upper) + "]"}};
    if (wants(config, "csv")) writer.emit("classifications.csv", classifications_csv(cs));
    *ctx.out << "replicas " << cs.size() << ": EXIT_EARLY " << counts[0] << ", STAY " << counts[1] << ", VIOLATION "
             << counts[2] << " (95% CI [" << fmt(ci.lower) << ", " << fmt(ci.upper) << "])\n";
  } else {
    if (run.substep_factor < 4) throw PreconditionError("diffusion proxy report needs substep_factor >= 4");
    const double points = static_cast<double>(steps.horizon_K) * run.substep_factor;
    if (points > 5e7) {
      throw PreconditionError("diffusion proxy trajectory of " + fmt(points) +
                              " points exceeds the in-memory limit 5e7; set run.eta");
    }
    std::vector<OscillationReport> reps(run.replicas);
    std::vector<Trajectory> kept(std::min(run.write_trajectories, run.replicas));
    parallel_for(
        run.replicas,
        [&](std::size_t i) {
          Trajectory traj;
          try {
            traj = run_diffusion_proxy(landscape, langevin_config(steps, run, i), run.substep_factor);
          } catch (const DivergenceError& e) {
            throw DivergenceError(e.index(), "replica " + std::to_string(i) + ": " + e.what(), i);
          }
          ProblemParams p = params;
          reps[i] = interstep_oscillation_check(traj, p);
          if (i < kept.size()) kept[i] = std::move(traj);
        },
        ctx.workers ? ctx.workers : run.workers);
    std::size_t intervals = 0, violations = 0;
    double max_osc = 0.0;
    for (const auto& r : reps) {
      intervals += r.intervals;
      violations += r.violations;
      max_osc = std::max(max_osc, r.max_oscillation);
    }
    const Interval ci = wilson_interval(violations, intervals);
    const double bound = reps.front().per_interval_bound;
    report["substep_factor"] = run.substep_factor;
    report["intervals"] = intervals;
    report["oscillation_violations"] = violations;
    report["oscillation_threshold"] = jnum(reps.front().threshold);
    report["per_interval_bound"] = jnum(bound);
    report["violation_fraction"] = intervals ? static_cast<double>(violations) / static_cast<double>(intervals) : 0.0;
    report["violation_ci95"] = {ci.lower, ci.upper};
    report["max_oscillation"] = jnum(max_osc);
    report["consistent"] = ci.lower <= bound;
    md = {{"kind", run.kind},
          {"eta", fmt(steps.eta)},
          {"beta", fmt(steps.beta)},
          {"intervals", std::to_string(intervals)},
          {"violations", std::to_string(violations)},
          {"per-interval bound", fmt(bound)},
          {"consistent", ci.lower <= bound ? "yes" : "no"}};
    for (std::size_t i = 0; i < kept.size(); ++i) {
      writer.emit(trajectory_name(i, config.output.trajectory_format),
                  trajectory_bytes(kept[i], config.output.trajectory_format));
    }
    *ctx.out << "intervals " << intervals << ", oscillation violations " << violations << " (bound per interval "
             << fmt(bound) << ")\n";
  }
  writer.time("simulate", seconds_since(sim_start));

  if (run.kind != "diffusion_proxy") {
    const std::size_t count = std::min(run.write_trajectories, run.replicas);
    for (std::size_t i = 0; i < count; ++i) {
      const LangevinConfig c = langevin_config(steps, run, i);
      const Trajectory traj = run.kind == "discrete" ? run_discrete_langevin(landscape, c)
                                                     : run_exact_ou(OULinearization::from_minimum(minimum), c);
      writer.emit(trajectory_name(i, config.output.trajectory_format),
                  trajectory_bytes(traj, config.output.trajectory_format));
    }
  }
  writer.emit("report.json", report.dump(2) + "\n");
  if (wants(config, "md")) writer.emit("report.md", markdown_summary("simulation report", md));
  writer.time("total", seconds_since(start));
  writer.finish();
  return kExitOk;
}

// ---------------------------------------------------------------------------
// sweep

int cmd_sweep(const ExperimentConfig& config, const CommandContext& ctx) {
  const auto start = Clock::now();
  if (config.landscape.family != "double_well") {
    throw PreconditionError("sweep requires the double_well family, got '" + config.landscape.family + "'");
  }
  if (config.run.betas.empty()) throw PreconditionError("sweep requires a non-empty run.betas list");
  const BuiltLandscape built = build_landscape(config);
  const LocalMinimum minimum = find_local_minimum(*built.landscape, default_minimum_start(config, built.params.d));
  EscapeSweepOptions opts;
  opts.betas = config.run.betas;
  opts.eta = config.run.eta.value_or(0.01);
  opts.budget_K = config.run.budget_K;
  opts.replicas = config.run.replicas;
  opts.seed = config.run.seed;
  opts.noise_substeps = config.run.noise_substeps;
  opts.workers = ctx.workers ? ctx.workers : config.run.workers;
  const EscapeStats stats = escape_time_sweep(*built.landscape, minimum, opts);

  OutputWriter writer(ctx.out_dir, "sweep", &config, config.run.seed);
  std::ostringstream csv;
  csv << std::setprecision(17) << "beta,replica,escape_time,censored\n";
  for (const auto& s : stats.samples) {
    csv << s.beta << ',' << s.replica << ',' << s.escape_time << ',' << (s.censored ? 1 : 0) << '\n';
  }
  writer.emit("escape_samples.csv", csv.str());

  bool partial = false;
  Json per = Json::array();
  for (std::size_t i = 0; i < stats.betas.size(); ++i) {
    partial = partial || stats.fully_censored[i];
    Json b;
    b["beta"] = stats.betas[i];
    b["replicas"] = stats.replica_counts[i];
    b["uncensored"] = stats.uncensored_counts[i];
    b["censoring_fraction"] = stats.censoring_fraction[i];
    b["fully_censored"] = static_cast<bool>(stats.fully_censored[i]);
    b["mean_escape"] = jnum(stats.mean_escape[i]);
    b["mean_escape_se"] = jnum(stats.mean_escape_se[i]);
    b["log_mean_escape"] = jnum(stats.log_mean_escape[i]);
    per.push_back(b);
  }
  Json j;
  j["eta"] = stats.eta;
  j["budget_K"] = stats.budget_K;
  j["replicas"] = config.run.replicas;
  j["seed"] = config.run.seed;
  j["partial"] = partial;
  j["betas"] = per;
  if (stats.regression) {
    j["regression"] = {{"slope", stats.regression->slope},
                       {"intercept", stats.regression->intercept},
                       {"r_squared", stats.regression->r_squared}};
  } else {
    j["regression"] = nullptr;
  }
  writer.emit("sweep.json", j.dump(2) + "\n");
  if (wants(config, "md")) {
    std::ostringstream md;
    md << "# escape-time sweep\n\n| beta | uncensored | mean escape | log mean escape |\n|---|---|---|---|\n";
    for (std::size_t i = 0; i < stats.betas.size(); ++i) {
      md << "| " << fmt(stats.betas[i]) << " | " << stats.uncensored_counts[i] << " | " << fmt(stats.mean_escape[i])
         << " | " << fmt(stats.log_mean_escape[i]) << " |\n";
    }
    if (stats.regression) {
      md << "\nslope " << fmt(stats.regression->slope) << ", r^2 " << fmt(stats.regression->r_squared) << "\n";
    }
    writer.emit("sweep.md", md.str());
  }
  writer.time("total", seconds_since(start));
  writer.finish();

  if (stats.regression) {
    *ctx.out << "slope " << fmt(stats.regression->slope) << ", intercept " << fmt(stats.regression->intercept)
             << ", r^2 " << fmt(stats.regression->r_squared) << "\n";
  }
  if (partial) *ctx.err << "warning: some betas are fully censored; output is partial\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// verify

std::vector<std::string> oracle_names() {
  return {"gaussian_mgf", "martingale_tail", "uniform_deviation", "strongly_morse_transfer", "aposteriori_bound"};
}

std::uint64_t default_oracle_seed(const std::string& name) {
  const auto names = oracle_names();
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw PreconditionError("unknown oracle '" + name + "'");
  return 1001ULL * static_cast<std::uint64_t>(it - names.begin() + 1);
}

OracleVerdict run_named_oracle(const std::string& name, std::uint64_t seed, std::optional<std::size_t> replicas) {
  if (name == "gaussian_mgf") return verify_gaussian_mgf(replicas.value_or(1000000), seed);
  if (name == "martingale_tail") {
    std::vector<std::pair<std::string, OracleVerdict>> parts;
    const auto setups = default_martingale_setups();
    for (std::size_t i = 0; i < setups.size(); ++i) {
      MartingaleTailSetup s = setups[i];
      if (replicas) s.replicas = *replicas;
      parts.emplace_back("setting " + std::to_string(i + 1), verify_martingale_tail(s, derive_seed(seed, i)));
    }
    return combine(name, seed, parts);
  }
  if (name == "uniform_deviation") {
    std::vector<std::pair<std::string, OracleVerdict>> parts;
    DeviationScalingSetup s;
    s.dataset_replicas = replicas.value_or(5000);
    for (std::size_t d : {1u, 2u}) {
      const GaussianLocationFamily family(TruncatedGaussianLaw{Vector::Zero(static_cast<Eigen::Index>(d)), 3.0});
      parts.emplace_back("d=" + std::to_string(d),
                         verify_uniform_deviation_scaling(family, s, derive_seed(seed, d)).verdict);
    }
    return combine(name, seed, parts);
  }
  if (name == "strongly_morse_transfer") {
    Vector curv(2);
    curv << 1.0, 2.0;
    const PerturbedQuadraticFamily family(PerturbedQuadraticLaw{curv, 0.25, 0.5});
    MorseTransferSetup s;
    if (replicas) s.dataset_replicas = *replicas;
    return verify_strongly_morse_transfer(family, s, seed);
  }
  if (name == "aposteriori_bound") {
    const GaussianLocationFamily family(TruncatedGaussianLaw{Vector::Zero(2), 3.0}, 0.0, 0.25);
    AposterioriSetup s;
    s.params.epsilon = 0.9;
    s.params.r = 0.9 / 8.0;
    s.params.T = 1.0;
    s.params.delta = 0.1;
    s.params.c2 = 128.0 / 3.0;
    s.params.c = 1.0;
    s.n = 2000;
    s.dataset_replicas = replicas.value_or(100);
    return verify_aposteriori_bound(family, s, seed).verdict;
  }
  throw PreconditionError("unknown oracle '" + name + "'");
}

std::string verdict_to_json(const OracleVerdict& v) {
  Json j;
  j["name"] = v.name;
  j["status"] = to_string(v.status);
  j["statistic"] = jnum(v.statistic);
  j["threshold"] = jnum(v.threshold);
  j["standard_error"] = v.standard_error ? jnum(*v.standard_error) : Json(nullptr);
  j["seed"] = v.seed;
  j["sample_count"] = v.sample_count;
  Json cases = Json::array();
  for (const auto& c : v.cases) {
    Json e;
    e["label"] = c.label;
    e["statistic"] = jnum(c.statistic);
    e["threshold"] = jnum(c.threshold);
    e["standard_error"] = c.standard_error ? jnum(*c.standard_error) : Json(nullptr);
    e["pass"] = c.pass;
    e["note"] = c.note;
    cases.push_back(e);
  }
  j["cases"] = cases;
  j["notes"] = v.notes;
  return j.dump(2) + "\n";
}

int cmd_verify(const VerifyOptions& options, const CommandContext& ctx) {
  const auto known = oracle_names();
  std::vector<std::string> names = options.all ? known : options.names;
  if (names.empty()) {
    *ctx.err << "verify: name an oracle or pass --all; available: ";
    for (std::size_t i = 0; i < known.size(); ++i) *ctx.err << (i ? ", " : "") << known[i];
    *ctx.err << "\n";
    return kExitUsage;
  }
  for (const auto& n : names) {
    if (std::find(known.begin(), known.end(), n) == known.end()) {
      *ctx.err << "verify: unknown oracle '" << n << "'; available: ";
      for (std::size_t i = 0; i < known.size(); ++i) *ctx.err << (i ? ", " : "") << known[i];
      *ctx.err << "\n";
      return kExitUsage;
    }
  }
  OutputWriter writer(ctx.out_dir, "verify", nullptr, options.seed.value_or(0));
  bool all_pass = true;
  for (const auto& n : names) {
    const auto start = Clock::now();
    const std::uint64_t seed = options.seed ? derive_seed(*options.seed, default_oracle_seed(n)) : default_oracle_seed(n);
    const OracleVerdict v = run_named_oracle(n, seed, options.replicas);
    writer.time(n, seconds_since(start));
    writer.emit("verdict_" + n + ".json", verdict_to_json(v));
    all_pass = all_pass && v.status == VerdictStatus::pass;
    *ctx.out << n << ": " << to_string(v.status) << " (statistic " << fmt(v.statistic) << ", threshold "
             << fmt(v.threshold) << ")\n";
  }
  writer.finish();
  return fail_or_ok(all_pass);
}

// ---------------------------------------------------------------------------
// classify

int cmd_classify(const ExperimentConfig& config, const std::vector<std::string>& paths, const CommandContext& ctx) {
  if (paths.empty()) throw ConfigError("$", "classify: no trajectory files given");
  const BuiltLandscape built = build_landscape(config);
  const ProblemParams& params = built.params;
  const LocalMinimum minimum = find_local_minimum(*built.landscape, default_minimum_start(config, params.d));
  TubeSpec tube{minimum.location, minimum.hessian, params.epsilon, params.r, params.constants.m};
  tube.validate();
  const double t_rec = recurrence_time(params);
  const double t_esc = t_rec + params.T;

  Json results = Json::array();
  for (const auto& path : paths) {
    const Trajectory traj = read_trajectory_binary(path);
    if (traj.dimension() != params.d) {
      throw PreconditionError(path + ": trajectory dimension " + std::to_string(traj.dimension()) +
                              " does not match the landscape dimension " + std::to_string(params.d));
    }
    Json r;
    r["path"] = std::filesystem::path(path).filename().string();
    r["kind"] = to_string(traj.kind);
    r["eta"] = jnum(traj.config.eta);
    r["points"] = traj.size();
    if (traj.kind == TrajectoryKind::diffusion_proxy) {
      const OscillationReport o = interstep_oscillation_check(traj, params);
      r["intervals"] = o.intervals;
      r["oscillation_violations"] = o.violations;
      r["per_interval_bound"] = jnum(o.per_interval_bound);
      r["consistent"] = o.consistent;
    } else {
      const EventClassification c = classify_trajectory(traj, tube, t_rec, t_esc);
      r["classification"] = classification_json(c);
      *ctx.out << r["path"].get<std::string>() << ": " << to_string(c.outcome) << "\n";
    }
    results.push_back(r);
  }
  OutputWriter writer(ctx.out_dir, "classify", &config, config.run.seed);
  writer.emit("classify.json", results.dump(2) + "\n");
  writer.finish();
  return kExitOk;
}

// ---------------------------------------------------------------------------
// command line

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Langevin metastability toolkit"};
  app.set_version_flag("--version", std::string(METASTAB_VERSION));
  app.require_subcommand(1, 1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replicas;
  std::optional<std::string> out_dir;
  bool override_admissibility = false;
  std::string format = "json";
  std::size_t workers = 0;
  app.add_option("--config", config_path, "Experiment configuration (JSON)");
  app.add_option("--seed", seed, "Root seed (u64)");
  app.add_option("--replicas", replicas, "Replica count")->check(CLI::PositiveNumber);
  app.add_option("--out", out_dir, "Output directory (overrides METASTAB_OUT_DIR and the config)");
  app.add_flag("--override-admissibility", override_admissibility, "Run with inadmissible (eta, beta)");
  app.add_option("--format", format, "Output format")->check(CLI::IsMember({"json", "csv", "md"}));
  app.add_option("--workers", workers, "Worker threads (0: all cores); never changes results");

  auto* bounds = app.add_subcommand("bounds", "Print every closed-form bound");
  auto* simulate = app.add_subcommand("simulate", "Run replicas and classify the two events");
  auto* sweep = app.add_subcommand("sweep", "Escape-time sweep over beta on the double well");
  std::vector<double> betas;
  sweep->add_option("--betas", betas, "Inverse temperatures (overrides run.betas)");
  auto* verify = app.add_subcommand("verify", "Run named oracles");
  std::vector<std::string> oracle_list;
  bool all = false;
  verify->add_option("names", oracle_list, "Oracle names");
  verify->add_flag("--all", all, "Run every oracle");
  auto* classify = app.add_subcommand("classify", "Re-classify stored binary trajectories");
  std::vector<std::string> traj_paths;
  classify->add_option("trajectories", traj_paths, "Binary trajectory files")->required();

  try {
    std::vector<std::string> args;
    for (int i = argc - 1; i > 0; --i) args.emplace_back(argv[i]);
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  CommandContext ctx;
  ctx.out = &out;
  ctx.err = &err;
  ctx.format = format;
  ctx.workers = workers;

  try {
    if (verify->parsed()) {
      ctx.out_dir = resolve_output_directory(out_dir, "out");
      VerifyOptions opts;
      opts.names = oracle_list;
      opts.all = all;
      opts.seed = seed;
      opts.replicas = replicas;
      return cmd_verify(opts, ctx);
    }
    if (config_path.empty()) {
      err << "error: --config is required for this subcommand\n";
      return kExitUsage;
    }
    ExperimentConfig config = load_config(config_path);
    if (seed) config.run.seed = *seed;
    if (replicas) config.run.replicas = *replicas;
    if (override_admissibility) config.run.override_admissibility = true;
    if (!betas.empty()) config.run.betas = betas;
    ctx.out_dir = resolve_output_directory(out_dir, config.output.directory);
    if (bounds->parsed()) return cmd_bounds(config, ctx);
    if (simulate->parsed()) return cmd_simulate(config, ctx);
    if (sweep->parsed()) return cmd_sweep(config, ctx);
    if (classify->parsed()) return cmd_classify(config, traj_paths, ctx);
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "config error at " << e.path() << ": " << e.what() << "\n";
    return kExitUsage;
  } catch (const DivergenceError& e) {
    err << "divergence";
    if (e.replica()) err << " in replica " << *e.replica();
    err << " at iterate " << e.index() << ": " << e.what() << "\n";
    return kExitFailure;
  } catch (const PreconditionError& e) {
    err << "precondition violated: " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace metastab
