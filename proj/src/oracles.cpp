#include "metastab/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "metastab/errors.hpp"
#include "metastab/metastability.hpp"
#include "metastab/parallel.hpp"
#include "metastab/rng.hpp"
#include "metastab/stats.hpp"

namespace metastab {

namespace {

constexpr double kZ95OneSided = 1.6448536269514722;

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

Matrix mat(Eigen::Index n, std::initializer_list<double> xs) {
  Matrix a(n, n);
  auto it = xs.begin();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = *it++;
  }
  return a;
}

std::string num(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

/// Points of the cubic grid with `resolution` nodes per axis inside B(radius).
std::vector<Vector> ball_grid(std::size_t d, std::size_t resolution, double radius) {
  std::vector<Vector> out;
  std::vector<std::size_t> idx(d, 0);
  auto coord = [&](std::size_t i) {
    return resolution == 1 ? 0.0
                           : -radius + 2.0 * radius * static_cast<double>(i) / static_cast<double>(resolution - 1);
  };
  Vector w(static_cast<Eigen::Index>(d));
  for (;;) {
    for (std::size_t j = 0; j < d; ++j) w(static_cast<Eigen::Index>(j)) = coord(idx[j]);
    if (w.norm() <= radius * (1.0 + 1e-12)) out.push_back(w);
    std::size_t j = 0;
    while (j < d && ++idx[j] == resolution) idx[j++] = 0;
    if (j == d) break;
  }
  return out;
}

Vector canonical_start(const LocalMinimum& minimum, double r, double R) {
  const SymmetricEigen eig(minimum.hessian);
  Vector w = minimum.location;
  w(0) += r / std::sqrt(eig.values(eig.values.size() - 1));
  const double norm = w.norm();
  if (norm > R) w *= (R > 0.0 ? R / norm : 0.0);
  return w;
}

}  // namespace

std::string to_string(VerdictStatus status) {
  switch (status) {
    case VerdictStatus::pass:
      return "PASS";
    case VerdictStatus::fail:
      return "FAIL";
    case VerdictStatus::inconclusive:
      return "INCONCLUSIVE";
  }
  return "UNKNOWN";
}

// ---------------------------------------------------------------------------
// Gaussian quadratic MGF

std::vector<MgfCase> default_mgf_cases() {
  return {
      {"gamma=0", vec({0.0}), mat(1, {1.0}), 0.0},
      {"mu=0,Sigma=1,gamma=1/4", vec({0.0}), mat(1, {1.0}), 0.25},
      {"mu=1,Sigma=1,gamma=1/10", vec({1.0}), mat(1, {1.0}), 0.1},
      {"d=2,correlated", vec({0.5, -0.3}), mat(2, {1.0, 0.3, 0.3, 0.5}), 0.15},
      {"d=3,correlated", vec({0.2, 0.1, -0.4}), mat(3, {0.5, 0.1, 0.0, 0.1, 0.8, 0.1, 0.0, 0.1, 0.3}), 0.2},
  };
}

OracleVerdict verify_gaussian_mgf(std::size_t trials, std::uint64_t seed, const std::vector<MgfCase>& cases) {
  if (trials < 100000) throw PreconditionError("verify_gaussian_mgf: trials must be >= 1e5");
  if (cases.empty()) throw PreconditionError("verify_gaussian_mgf: no cases");
  OracleVerdict verdict;
  verdict.name = "gaussian_mgf";
  verdict.seed = seed;
  verdict.sample_count = trials;
  verdict.threshold = 3.0;
  verdict.cases.resize(cases.size());

  parallel_for(cases.size(), [&](std::size_t c) {
    const MgfCase& mc = cases[c];
    const double closed = gaussian_quadratic_mgf(mc.mu, mc.sigma, mc.gamma);
    const SymmetricEigen eig(mc.sigma);
    const Matrix root = eig.apply([](double x) { return std::sqrt(std::max(x, 0.0)); });
    Rng rng(derive_seed(seed, c));
    Vector xi(mc.mu.size()), v(mc.mu.size());
    double mean = 0.0, m2 = 0.0;
    for (std::size_t k = 1; k <= trials; ++k) {
      for (Eigen::Index j = 0; j < xi.size(); ++j) xi(j) = rng.normal();
      v.noalias() = root * xi;
      v += mc.mu;
      const double x = std::exp(mc.gamma * v.squaredNorm());
      const double delta = x - mean;
      mean += delta / static_cast<double>(k);
      m2 += delta * (x - mean);
    }
    const double n = static_cast<double>(trials);
    const double se = std::sqrt(m2 / (n - 1.0) / n);
    OracleCase& out = verdict.cases[c];
    out.label = mc.label;
    out.standard_error = se;
    out.threshold = 3.0;
    if (se == 0.0) {
      out.statistic = mean == closed ? 0.0 : std::numeric_limits<double>::infinity();
      out.note = "zero Monte Carlo variance; exact equality required";
    } else {
      out.statistic = std::abs(mean - closed) / se;
    }
    out.pass = out.statistic <= 3.0;
    out.note += (out.note.empty() ? "" : "; ") + std::string("closed=") + num(closed) + " mc=" + num(mean);
  });

  bool all = true;
  std::size_t worst = 0;
  for (std::size_t c = 0; c < verdict.cases.size(); ++c) {
    all = all && verdict.cases[c].pass;
    if (verdict.cases[c].statistic > verdict.cases[worst].statistic) worst = c;
  }
  verdict.statistic = verdict.cases[worst].statistic;
  verdict.standard_error = verdict.cases[worst].standard_error;
  verdict.status = all ? VerdictStatus::pass : VerdictStatus::fail;
  return verdict;
}

// ---------------------------------------------------------------------------
// Martingale tail bound

std::vector<MartingaleTailSetup> default_martingale_setups() {
  std::vector<MartingaleTailSetup> out(3);
  out[0].H = Matrix::Identity(2, 2);
  out[0].beta = 10.0;
  out[0].y0 = Vector::Zero(2);
  out[0].t0 = 0.5;
  out[0].t1 = 1.0;

  out[1].H = mat(2, {1.0, 0.0, 0.0, 3.0});
  out[1].beta = 5.0;
  out[1].y0 = vec({0.3, -0.2});
  out[1].t0 = 0.2;
  out[1].t1 = 0.7;

  out[2].H = mat(3, {2.0, 0.5, 0.0, 0.5, 1.5, 0.3, 0.0, 0.3, 1.0});
  out[2].beta = 20.0;
  out[2].y0 = vec({0.1, 0.2, -0.1});
  out[2].t0 = 1.0;
  out[2].t1 = 1.25;
  return out;
}

double optimized_tail_bound(const TailMoments& moments, double beta, double h, std::size_t d,
                            std::size_t lambda_points) {
  if (lambda_points == 0) throw PreconditionError("optimized tail bound: empty lambda grid");
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i <= lambda_points; ++i) {
    const double lambda = 0.5 * static_cast<double>(i) / static_cast<double>(lambda_points + 1);
    best = std::min(best, martingale_tail_bound(moments.mu, moments.sigma, beta, lambda, h, d).raw);
  }
  return best;
}

OracleVerdict verify_martingale_tail(const MartingaleTailSetup& setup, std::uint64_t seed) {
  const auto d = static_cast<std::size_t>(setup.H.rows());
  if (d == 0 || setup.H.cols() != setup.H.rows() || setup.y0.size() != setup.H.rows()) {
    throw PreconditionError("verify_martingale_tail: H and y0 dimensions disagree");
  }
  if (!(setup.t1 > setup.t0) || !(setup.t0 >= 0.0)) throw PreconditionError("verify_martingale_tail: needs t1 > t0 >= 0");
  if (setup.substeps < 1) throw PreconditionError("verify_martingale_tail: degenerate grid");
  if (setup.replicas < 10000) throw PreconditionError("verify_martingale_tail: replicas must be >= 1e4");
  if (!(setup.beta > 0.0)) throw PreconditionError("verify_martingale_tail: beta must be > 0");

  const OULinearization lin(Vector::Zero(static_cast<Eigen::Index>(d)), setup.H);
  const TailMoments moments = tail_bound_moments(setup.H, setup.y0, setup.t1, setup.beta);
  auto bound_at = [&](double h) { return optimized_tail_bound(moments, setup.beta, h, d, setup.lambda_points); };

  std::vector<double> h_grid = setup.h_grid;
  if (h_grid.empty()) {
    for (double target : {1.0, 0.5, 0.25, 0.1, 0.05, 0.02, 0.01, 0.005}) {
      double lo = 0.0, hi = 1.0;
      while (bound_at(hi) > target) hi *= 2.0;
      if (bound_at(lo) <= target) {
        h_grid.push_back(0.0);
        continue;
      }
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (bound_at(mid) > target ? lo : hi) = mid;
      }
      h_grid.push_back(hi);
    }
  }

  // Eigenbasis coordinates: X_j(t) = mu_j + sqrt(2/beta) int_0^t sqrt(l_j) e^{(s - t1) l_j} dB_j.
  const Vector lambda = lin.eig.values;
  const Vector mu_eig = lin.eig.vectors.transpose() * moments.mu;
  const std::size_t fine = 2 * setup.substeps;
  const double dt = (setup.t1 - setup.t0) / static_cast<double>(fine);
  Matrix inc_sd(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(fine));
  Vector start_sd(static_cast<Eigen::Index>(d));
  for (std::size_t j = 0; j < d; ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    const double l = lambda(jj);
    start_sd(jj) = std::sqrt(std::max(0.0, (std::exp(2.0 * (setup.t0 - setup.t1) * l) - std::exp(-2.0 * setup.t1 * l)) /
                                               setup.beta));
    for (std::size_t i = 0; i < fine; ++i) {
      const double a = setup.t0 + static_cast<double>(i) * dt;
      const double b = setup.t0 + static_cast<double>(i + 1) * dt;
      inc_sd(jj, static_cast<Eigen::Index>(i)) =
          std::sqrt(std::max(0.0, (std::exp(2.0 * (b - setup.t1) * l) - std::exp(2.0 * (a - setup.t1) * l)) / setup.beta));
    }
  }

  std::vector<double> sup_fine(setup.replicas), sup_coarse(setup.replicas);
  parallel_for(setup.replicas, [&](std::size_t rep) {
    Rng rng(derive_seed(seed, rep));
    Vector x(static_cast<Eigen::Index>(d));
    for (Eigen::Index j = 0; j < x.size(); ++j) x(j) = mu_eig(j) + start_sd(j) * rng.normal();
    double sf = x.norm();
    double sc = sf;
    for (std::size_t i = 0; i < fine; ++i) {
      for (Eigen::Index j = 0; j < x.size(); ++j) x(j) += inc_sd(j, static_cast<Eigen::Index>(i)) * rng.normal();
      const double nrm = x.norm();
      sf = std::max(sf, nrm);
      if ((i + 1) % 2 == 0) sc = std::max(sc, nrm);
    }
    sup_fine[rep] = sf;
    sup_coarse[rep] = sc;
  });

  OracleVerdict verdict;
  verdict.name = "martingale_tail";
  verdict.seed = seed;
  verdict.sample_count = setup.replicas;
  verdict.threshold = 0.0;
  verdict.statistic = -std::numeric_limits<double>::infinity();
  bool fail = false, inconclusive = false;
  double max_shift = 0.0;
  for (std::size_t r = 0; r < setup.replicas; ++r) max_shift = std::max(max_shift, sup_fine[r] - sup_coarse[r]);
  for (double h : h_grid) {
    const auto hits_f = static_cast<std::size_t>(std::count_if(sup_fine.begin(), sup_fine.end(), [h](double s) { return s >= h; }));
    const auto hits_c =
        static_cast<std::size_t>(std::count_if(sup_coarse.begin(), sup_coarse.end(), [h](double s) { return s >= h; }));
    const double n = static_cast<double>(setup.replicas);
    const double p_fine = static_cast<double>(hits_f) / n;
    const double p_coarse = static_cast<double>(hits_c) / n;
    const double upper = wilson_interval(hits_f, setup.replicas, kZ95OneSided).upper;
    const double bound = bound_at(h);
    OracleCase oc;
    oc.label = "h=" + num(h);
    oc.statistic = upper - bound;
    oc.threshold = 0.0;
    oc.standard_error = std::sqrt(p_fine * (1.0 - p_fine) / n);
    oc.pass = upper <= bound;
    oc.note = "tail=" + num(p_fine) + " upper95=" + num(upper) + " bound=" + num(bound) + " coarse_tail=" + num(p_coarse);
    if (p_fine > bound) {
      fail = true;
    } else if (!oc.pass) {
      inconclusive = true;
    }
    if (std::abs(p_fine - p_coarse) > setup.refinement_tolerance) {
      inconclusive = true;
      oc.pass = false;
      oc.note += " refinement-unstable";
    }
    verdict.statistic = std::max(verdict.statistic, oc.statistic);
    verdict.cases.push_back(oc);
  }
  verdict.notes.push_back("grid sup over " + std::to_string(fine) + " fine / " + std::to_string(setup.substeps) +
                          " coarse intervals; largest per-path fine-minus-coarse sup = " + num(max_shift));
  verdict.notes.push_back("grid sup never exceeds the path sup, so coarseness only weakens the dominance check");
  verdict.status = fail ? VerdictStatus::fail : (inconclusive ? VerdictStatus::inconclusive : VerdictStatus::pass);
  return verdict;
}

// ---------------------------------------------------------------------------
// Uniform deviation scaling

DeviationScalingResult verify_uniform_deviation_scaling(const ErmFamily& family, const DeviationScalingSetup& setup,
                                                        std::uint64_t seed) {
  const std::size_t d = family.dimension();
  if (d > 2) throw PreconditionError("uniform deviation scaling: d must be <= 2");
  if (setup.n_grid.size() < 4) throw PreconditionError("uniform deviation scaling: n_grid too short for regression (< 4)");
  for (std::size_t n : setup.n_grid) {
    if (n < 2) throw PreconditionError("uniform deviation scaling: every n must be >= 2");
  }
  if (setup.dataset_replicas < 2) throw PreconditionError("uniform deviation scaling: need >= 2 dataset replicas");
  const LandscapePtr population = family.population();
  if (!population) throw PreconditionError("uniform deviation scaling: family has no closed-form population risk");

  const std::vector<Vector> grid = ball_grid(d, setup.grid_resolution, family.constants().R);
  const std::size_t nn = setup.n_grid.size();
  const std::size_t n_max = *std::max_element(setup.n_grid.begin(), setup.n_grid.end());
  std::vector<double> pop_value(grid.size());
  std::vector<Vector> pop_grad(grid.size());
  std::vector<Matrix> pop_hess(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    pop_value[g] = population->value(grid[g]);
    pop_grad[g] = population->gradient(grid[g]);
    pop_hess[g] = population->hessian(grid[g]);
  }

  // dev[level][n index][replica]
  std::vector<std::vector<std::vector<double>>> dev(
      3, std::vector<std::vector<double>>(nn, std::vector<double>(setup.dataset_replicas, 0.0)));
  parallel_for(setup.dataset_replicas, [&](std::size_t rep) {
    Dataset full;
    if (setup.nested) full = family.draw(n_max, derive_seed(seed, rep));
    Vector g(static_cast<Eigen::Index>(d));
    for (std::size_t j = 0; j < nn; ++j) {
      Dataset data;
      if (setup.nested) {
        data = full;
        data.samples = full.samples.topRows(static_cast<Eigen::Index>(setup.n_grid[j]));
      } else {
        data = family.draw(setup.n_grid[j], derive_seed(derive_seed(seed, rep), j));
      }
      const LandscapePtr emp = family.empirical(data);
      double sv = 0.0, sg = 0.0, sh = 0.0;
      for (std::size_t p = 0; p < grid.size(); ++p) {
        sv = std::max(sv, std::abs(emp->value(grid[p]) - pop_value[p]));
        emp->gradient_into(grid[p], g);
        sg = std::max(sg, (g - pop_grad[p]).norm());
        const Matrix dh = emp->hessian(grid[p]) - pop_hess[p];
        if (!dh.isZero(0.0)) sh = std::max(sh, spectral_norm(dh));
      }
      dev[0][j][rep] = sv;
      dev[1][j][rep] = sg;
      dev[2][j][rep] = sh;
    }
  });

  DeviationScalingResult result;
  OracleVerdict& verdict = result.verdict;
  verdict.name = "uniform_deviation";
  verdict.seed = seed;
  verdict.sample_count = setup.dataset_replicas;
  verdict.threshold = setup.slope_tolerance;
  verdict.statistic = 0.0;
  bool all = true;
  const char* names[3] = {"risk", "gradient", "hessian"};
  std::vector<double> x(nn);
  for (std::size_t j = 0; j < nn; ++j) {
    const double n = static_cast<double>(setup.n_grid[j]);
    x[j] = std::log(n / std::log(n));
  }
  for (std::size_t level = 0; level < 3; ++level) {
    DeviationLevel out;
    out.level = names[level];
    for (std::size_t j = 0; j < nn; ++j) out.quantiles.push_back(quantile(dev[level][j], setup.quantile_level));
    const bool all_zero = std::all_of(out.quantiles.begin(), out.quantiles.end(), [](double q) { return q == 0.0; });
    const bool any_zero = std::any_of(out.quantiles.begin(), out.quantiles.end(), [](double q) { return q <= 0.0; });
    OracleCase oc;
    oc.label = out.level;
    oc.threshold = setup.slope_tolerance;
    if (all_zero) {
      out.degenerate = true;
      out.pass = true;
      oc.note = "degenerate PASS: deviation identically zero at every n";
    } else if (any_zero) {
      out.pass = false;
      oc.statistic = std::numeric_limits<double>::infinity();
      oc.note = "zero quantile at some n; slope undefined";
    } else {
      std::vector<double> y;
      for (double q : out.quantiles) y.push_back(std::log(q));
      const LinearFit fit = fit_line(x, y);
      out.slope = fit.slope;
      out.r_squared = fit.r_squared;
      oc.statistic = std::abs(fit.slope - setup.target_slope);
      out.pass = oc.statistic <= setup.slope_tolerance;
      oc.note = "slope=" + num(fit.slope) + " r2=" + num(fit.r_squared);
    }
    oc.pass = out.pass;
    all = all && out.pass;
    if (!out.degenerate) verdict.statistic = std::max(verdict.statistic, oc.statistic);
    verdict.cases.push_back(oc);
    result.levels.push_back(out);
  }
  verdict.notes.push_back("quantile level " + num(setup.quantile_level) + ", grid points " + std::to_string(grid.size()) +
                          (setup.nested ? ", nested datasets" : ", independent datasets"));
  verdict.status = all ? VerdictStatus::pass : VerdictStatus::fail;
  return result;
}

// ---------------------------------------------------------------------------
// Strongly Morse transfer

OracleVerdict verify_strongly_morse_transfer(const ErmFamily& family, const MorseTransferSetup& setup,
                                             std::uint64_t seed) {
  const std::size_t d = family.dimension();
  if (d > 2) throw PreconditionError("strongly Morse transfer: d must be <= 2");
  if (setup.dataset_replicas == 0) throw PreconditionError("strongly Morse transfer: dataset_replicas must be >= 1");
  const LandscapePtr population = family.population();
  const double radius = family.constants().R;
  if (!population) throw PreconditionError("population certificate missing: family has no population risk");
  const MorseReport pop_cert =
      certify_strongly_morse(*population, 2.0 * setup.eps0, 2.0 * setup.m, setup.grid_resolution, radius);
  if (!pop_cert.pass) {
    throw PreconditionError("population certificate missing: population risk is not (2 eps0, 2 m)-strongly Morse");
  }

  ProblemParams params = setup.params;
  params.constants = family.constants();
  params.d = d;
  params.delta = setup.delta;
  const std::size_t floor = theorem2_sample_floor(params, setup.eps0, setup.m);
  const std::size_t n =
      setup.n > 0 ? setup.n
                  : static_cast<std::size_t>(std::ceil(setup.floor_multiplier * static_cast<double>(floor)));

  std::vector<char> ok(setup.dataset_replicas, 0);
  parallel_for(setup.dataset_replicas, [&](std::size_t rep) {
    const Dataset data = family.draw(n, derive_seed(seed, rep));
    const LandscapePtr emp = family.empirical(data);
    ok[rep] = certify_strongly_morse(*emp, setup.eps0, setup.m, setup.grid_resolution, radius).pass ? 1 : 0;
  });
  const auto passes = static_cast<std::size_t>(std::count(ok.begin(), ok.end(), 1));
  const double fraction = static_cast<double>(passes) / static_cast<double>(setup.dataset_replicas);
  const Interval ci = wilson_interval(passes, setup.dataset_replicas);
  const double margin = 0.5 * (ci.upper - ci.lower);

  OracleVerdict verdict;
  verdict.name = "strongly_morse_transfer";
  verdict.seed = seed;
  verdict.sample_count = setup.dataset_replicas;
  verdict.statistic = fraction;
  verdict.threshold = 1.0 - setup.delta - margin;
  verdict.standard_error = std::sqrt(fraction * (1.0 - fraction) / static_cast<double>(setup.dataset_replicas));
  verdict.status = fraction >= verdict.threshold ? VerdictStatus::pass : VerdictStatus::fail;
  verdict.notes.push_back("n = " + std::to_string(n) + ", sample floor = " + std::to_string(floor) +
                          ", population worst |lambda| = " + num(pop_cert.worst_min_abs_eigenvalue));
  OracleCase oc;
  oc.label = "strongly Morse fraction";
  oc.statistic = fraction;
  oc.threshold = verdict.threshold;
  oc.standard_error = verdict.standard_error;
  oc.pass = verdict.status == VerdictStatus::pass;
  oc.note = std::to_string(passes) + "/" + std::to_string(setup.dataset_replicas) + " certified";
  verdict.cases.push_back(oc);
  return verdict;
}

// ---------------------------------------------------------------------------
// A-posteriori risk bound

AposterioriResult verify_aposteriori_bound(const ErmFamily& family, const AposterioriSetup& setup, std::uint64_t seed) {
  const std::size_t d = family.dimension();
  if (setup.dataset_replicas == 0 || setup.n < 2) {
    throw PreconditionError("a-posteriori bound: needs n >= 2 and dataset_replicas >= 1");
  }
  if (!family.population()) throw PreconditionError("a-posteriori bound: family has no closed-form population risk");
  ProblemParams params = setup.params;
  params.constants = family.constants();
  params.d = d;
  params.validate();
  const auto& k = params.constants;
  const double eps_ceiling = 3.0 * std::pow(k.m, 1.5) / (2.0 * k.L);
  if (!(params.epsilon <= eps_ceiling)) {
    throw PreconditionError("epsilon <= 3 m^{3/2} / (2L) violated: epsilon = " + num(params.epsilon) +
                            ", ceiling = " + num(eps_ceiling));
  }

  AposterioriResult result;
  if (setup.eta && (setup.beta || setup.noiseless)) {
    result.eta = *setup.eta;
    result.beta = setup.noiseless ? std::numeric_limits<double>::infinity() : *setup.beta;
  } else {
    const AdmissiblePair pair = admissible_eta_beta(params);
    result.eta = setup.eta.value_or(pair.eta_max);
    result.beta = setup.noiseless ? std::numeric_limits<double>::infinity() : setup.beta.value_or(pair.beta_min);
  }
  const double t_rec = recurrence_time(params);
  const double t_esc = t_rec + params.T;
  result.horizon_K = std::max<std::size_t>(1, last_index_at_or_before(t_esc, result.eta));
  const std::size_t pre_end = last_index_at_or_before(t_rec, result.eta);
  const std::size_t post_begin = first_index_at_or_after(t_rec, result.eta);
  const std::size_t post_end = last_index_at_or_before(t_esc, result.eta);
  const double sigma = subgaussian_proxies(k).sigma;
  const double threshold = deviation_threshold_value(sigma, params.c, d, setup.n);
  const double two_eps = 2.0 * params.epsilon;

  result.replicas.resize(setup.dataset_replicas);
  parallel_for(setup.dataset_replicas, [&](std::size_t rep) {
    const std::uint64_t data_seed = derive_seed(seed, 2 * rep);
    const Dataset data = family.draw(setup.n, data_seed);
    const LandscapePtr emp = family.empirical(data);
    const LandscapePtr pop = emp->population();
    const LocalMinimum minimum = find_local_minimum(*emp, Vector::Zero(static_cast<Eigen::Index>(d)));

    LangevinConfig config;
    config.eta = result.eta;
    config.beta = setup.noiseless ? 1.0 : result.beta;
    config.noiseless = setup.noiseless;
    config.horizon_K = result.horizon_K;
    config.initial_point = setup.start_at_minimum ? minimum.location : canonical_start(minimum, params.r, k.R);
    config.seed = derive_seed(seed, 2 * rep + 1);

    bool left = false;
    double min_risk = std::numeric_limits<double>::infinity();
    double max_h = 0.0;
    Vector diff(static_cast<Eigen::Index>(d));
    stream_discrete_langevin(*emp, config, [&](std::size_t idx, double, const Vector& w) {
      diff = w - minimum.location;
      const double hn = std::sqrt(std::max(0.0, diff.dot(minimum.hessian * diff)));
      if (idx <= pre_end && hn >= two_eps) {
        left = true;
        return false;
      }
      if (idx >= post_begin && idx <= post_end) {
        min_risk = std::min(min_risk, emp->value(w));
        max_h = std::max(max_h, hn);
      }
      return idx < post_end;
    });

    AposterioriReplica& out = result.replicas[rep];
    out.threshold = threshold;
    if (left) return;
    out.retained = true;
    const double f_emp = emp->value(minimum.location);
    const double f_pop = pop->value(minimum.location);
    out.E1 = f_pop - f_emp;
    out.E2 = f_emp - min_risk;
    out.holds = f_pop <= min_risk + threshold;
    out.stay_2eps = max_h <= two_eps;
  });

  for (const auto& r : result.replicas) {
    if (!r.retained) continue;
    ++result.retained;
    if (r.holds) ++result.holds;
    if (r.stay_2eps) {
      ++result.e2_assertions;
      const double slack = 1e-12 * (1.0 + std::abs(r.E1) + std::abs(r.threshold));
      if (r.E2 > slack) ++result.e2_violations;
    }
  }

  OracleVerdict& verdict = result.verdict;
  verdict.name = "aposteriori_bound";
  verdict.seed = seed;
  verdict.sample_count = setup.dataset_replicas;
  verdict.notes.push_back("eta = " + num(result.eta) + ", beta = " + num(result.beta) + ", K = " +
                          std::to_string(result.horizon_K) + ", threshold = " + num(threshold) + " (c = " +
                          num(params.c) + ")");
  verdict.notes.push_back("single nominal delta with a Wilson margin; no split between data and noise");
  if (result.retained == 0) {
    verdict.status = VerdictStatus::inconclusive;
    verdict.notes.push_back("every replica left the 2 eps tube before T_rec");
    return result;
  }
  const double fraction = static_cast<double>(result.holds) / static_cast<double>(result.retained);
  const Interval ci = wilson_interval(result.holds, result.retained);
  verdict.statistic = fraction;
  verdict.threshold = 1.0 - params.delta - 0.5 * (ci.upper - ci.lower);
  verdict.standard_error = std::sqrt(fraction * (1.0 - fraction) / static_cast<double>(result.retained));

  OracleCase holds;
  holds.label = "inequality holds among retained";
  holds.statistic = fraction;
  holds.threshold = verdict.threshold;
  holds.standard_error = verdict.standard_error;
  holds.pass = fraction >= verdict.threshold;
  holds.note = std::to_string(result.holds) + "/" + std::to_string(result.retained) + " retained";
  OracleCase e2;
  e2.label = "E2 <= 0 on 2 eps-stay replicas";
  e2.statistic = static_cast<double>(result.e2_violations);
  e2.threshold = 0.0;
  e2.pass = result.e2_violations == 0;
  e2.note = std::to_string(result.e2_assertions) + " assertions";
  verdict.cases = {holds, e2};
  verdict.status = holds.pass && e2.pass ? VerdictStatus::pass : VerdictStatus::fail;
  return result;
}

}  // namespace metastab
