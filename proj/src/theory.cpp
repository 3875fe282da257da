#include "metastab/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "metastab/errors.hpp"

namespace metastab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(10);
  os << x;
  return os.str();
}

}  // namespace

void ProblemParams::validate() const {
  constants.validate();
  if (d < 1) throw PreconditionError("params: d must be >= 1");
  if (!(epsilon > 0.0)) throw PreconditionError("params: epsilon must be > 0");
  if (!(delta > 0.0 && delta < 1.0)) throw PreconditionError("params: delta must lie in (0, 1)");
  if (!(r > 0.0)) throw PreconditionError("params: r must be > 0");
  if (!(T >= 0.0)) throw PreconditionError("params: T must be >= 0");
  if (!(eps0 > 0.0)) throw PreconditionError("params: eps0 must be > 0");
  for (double k : {c1, c2, c, c0, c_prime, c_reflection}) {
    if (!(k > 0.0) || !std::isfinite(k)) throw PreconditionError("params: absolute constants must be finite and > 0");
  }
}

double recurrence_time(double m, double r, double epsilon) {
  if (!(m > 0.0) || !(r > 0.0) || !(epsilon > 0.0)) throw PreconditionError("recurrence_time: m, r, epsilon must be > 0");
  if (epsilon > 8.0 * r) throw PreconditionError("recurrence_time: requires epsilon <= 8r");
  return (2.0 / m) * std::log(8.0 * r / epsilon);
}

double recurrence_time(const ProblemParams& params) {
  return recurrence_time(params.constants.m, params.r, params.epsilon);
}

double escape_time(const ProblemParams& params) { return recurrence_time(params) + params.T; }

double theorem1_epsilon_ceiling(const ProblemParams& params) {
  const auto& k = params.constants;
  return params.c1 * k.m * k.m / (k.L * std::sqrt(k.M));
}

void require_theorem1_epsilon(const ProblemParams& params) {
  params.validate();
  const double ceiling = theorem1_epsilon_ceiling(params);
  if (!(params.epsilon < ceiling)) {
    throw PreconditionError("epsilon < c1 m^2 / (L sqrt(M)) violated: epsilon = " + fmt(params.epsilon) +
                            ", ceiling = " + fmt(ceiling));
  }
  if (params.epsilon > 8.0 * params.r) {
    throw PreconditionError("epsilon <= 8r violated: epsilon = " + fmt(params.epsilon) + ", 8r = " + fmt(8.0 * params.r));
  }
}

double gradient_moment_G0(const RegularityConstants& k, std::size_t d, double beta) {
  const double d_over_beta = std::isinf(beta) ? 0.0 : static_cast<double>(d) / beta;
  return 2.0 * k.M * k.M * (k.R * k.R + 2.0 * std::max(1.0, 1.0 / k.m) * (k.b + k.B * k.B + d_over_beta)) +
         2.0 * k.B * k.B;
}

double position_moment_G1(const RegularityConstants& k, std::size_t d) {
  return k.R + (k.b + static_cast<double>(d)) / k.m;
}

double eta_ceiling(const ProblemParams& params, double beta) {
  const auto& k = params.constants;
  const double d = static_cast<double>(params.d);
  const double t_rec = recurrence_time(params);
  const double t_esc = t_rec + params.T;
  double eta = std::min(1.0, k.m / (2.0 * k.M * k.M));
  if (t_esc > 0.0) {
    const double g0 = gradient_moment_G0(k, params.d, beta);
    eta = std::min(eta, params.c1 * params.delta * params.delta / (k.M * k.M * (beta * g0 + d) * t_esc));
  }
  if (t_rec > 0.0) {
    const double g1 = position_moment_G1(k, params.d);
    eta = std::min(eta, params.c1 * params.delta * params.epsilon * params.epsilon / (k.M * k.M * k.M * g1 * t_rec));
  }
  return eta;
}

double beta_floor(const ProblemParams& params, double eta) {
  const auto& k = params.constants;
  const double d = static_cast<double>(params.d);
  const double eps2 = params.epsilon * params.epsilon;
  const double t_rec = recurrence_time(params);
  const double t_esc = t_rec + params.T;
  if (!(t_esc > 0.0)) throw PreconditionError("beta floor: requires T_esc > 0");
  double beta = (params.c2 / eps2) * (d + std::log(k.M * t_esc / params.delta));
  if (t_rec > 0.0) {
    if (!(eta > 0.0)) throw PreconditionError("beta floor: requires eta > 0 when T_rec > 0");
    beta = std::max(beta, (params.c2 * k.M * d / eps2) * std::log(d * t_rec / (params.delta * eta)));
  }
  return beta;
}

AdmissibilityCheck check_admissibility(const ProblemParams& params, double eta, double beta) {
  AdmissibilityCheck out;
  out.eta_max = eta_ceiling(params, beta);
  out.beta_min = beta_floor(params, eta);
  if (!(eta > 0.0)) {
    out.failing = "eta > 0 violated: eta = " + fmt(eta);
  } else if (eta > out.eta_max * (1.0 + 1e-12)) {
    out.failing = "eta <= eta_max(beta) violated: eta = " + fmt(eta) + ", eta_max = " + fmt(out.eta_max);
  } else if (beta < out.beta_min * (1.0 - 1e-12)) {
    out.failing = "beta >= beta_min(eta) violated: beta = " + fmt(beta) + ", beta_min = " + fmt(out.beta_min);
  }
  out.admissible = out.failing.empty();
  return out;
}

AdmissiblePair admissible_eta_beta(const ProblemParams& params) {
  require_theorem1_epsilon(params);
  constexpr std::size_t kBudget = 200;
  AdmissiblePair out;
  double beta = std::max(beta_floor(params, 1.0), 1e-12);
  double eta = eta_ceiling(params, beta);
  for (std::size_t it = 1; it <= kBudget; ++it) {
    out.iterations = it;
    if (beta >= beta_floor(params, eta)) {
      out.eta_max = eta;
      out.beta_min = beta;
      out.G0 = gradient_moment_G0(params.constants, params.d, beta);
      out.G1 = position_moment_G1(params.constants, params.d);
      return out;
    }
    const double next_beta = beta_floor(params, eta);
    const double next_eta = eta_ceiling(params, next_beta);
    const bool settled =
        std::abs(next_beta - beta) <= 0.01 * beta && std::abs(next_eta - eta) <= 0.01 * eta;
    beta = settled ? 1.01 * next_beta : next_beta;
    eta = eta_ceiling(params, beta);
  }
  throw ConvergenceError("admissible (eta, beta): fixpoint iteration did not settle within " +
                         std::to_string(kBudget) + " passes; the conditions appear unsatisfiable");
}

double proposition1_beta_threshold(double epsilon, std::size_t d, double M, double T, double delta) {
  if (!(epsilon > 0.0) || !(delta > 0.0 && delta <= 1.0) || !(M > 0.0) || !(T >= 0.0)) {
    throw PreconditionError("proposition1 threshold: requires epsilon > 0, delta in (0,1], M > 0, T >= 0");
  }
  return (128.0 / (3.0 * epsilon * epsilon)) * (static_cast<double>(d) + std::log((2.0 * M * T + 1.0) / delta));
}

double proposition1_epsilon_ceiling(const RegularityConstants& k) {
  return (std::sqrt(2.0) - 1.0) * k.m * k.m / (4.0 * k.L * std::sqrt(2.0 * k.M));
}

double proposition1_beta_min(const ProblemParams& params) {
  params.validate();
  const double ceiling = proposition1_epsilon_ceiling(params.constants);
  if (!(params.epsilon < ceiling)) {
    throw PreconditionError("epsilon < (sqrt2 - 1) m^2 / (4 L sqrt(2M)) violated: epsilon = " + fmt(params.epsilon) +
                            ", ceiling = " + fmt(ceiling));
  }
  if (params.epsilon > 8.0 * params.r) throw PreconditionError("epsilon <= 8r violated");
  return proposition1_beta_threshold(params.epsilon, params.d, params.constants.M, params.T, params.delta);
}

TailBound martingale_tail_bound(const Vector& mu, const Matrix& sigma, double beta, double lambda, double h,
                                std::size_t d) {
  if (!(lambda > 0.0 && lambda < 1.0)) throw PreconditionError("martingale tail bound: lambda must lie in (0, 1)");
  if (!(beta > 0.0)) throw PreconditionError("martingale tail bound: beta must be > 0");
  if (sigma.rows() != sigma.cols() || sigma.rows() != mu.size()) {
    throw PreconditionError("martingale tail bound: mu and Sigma dimensions disagree");
  }
  const Matrix a = Matrix::Identity(mu.size(), mu.size()) - beta * lambda * sigma;
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) throw PreconditionError("martingale tail bound: I - beta lambda Sigma is not positive definite");
  const double quad = mu.dot(llt.solve(mu));
  const double log_value =
      -0.5 * static_cast<double>(d) * std::log1p(-lambda) - 0.5 * beta * lambda * (h * h - quad);
  TailBound out;
  out.raw = std::exp(log_value);
  out.clamped = std::min(out.raw, 1.0);
  out.lambda_warning = lambda >= 0.5;
  return out;
}

TailMoments tail_bound_moments(const Matrix& H, const Vector& y0, double t1, double beta) {
  if (!(beta > 0.0) || !(t1 >= 0.0)) throw PreconditionError("tail moments: requires beta > 0 and t1 >= 0");
  const SymmetricEigen eig(H);
  TailMoments out;
  out.mu = eig.apply([t1](double x) { return std::sqrt(x) * std::exp(-t1 * x); }) * y0;
  out.sigma = eig.apply([t1, beta](double x) { return -std::expm1(-2.0 * t1 * x) / beta; });
  return out;
}

double gaussian_quadratic_mgf(const Vector& mu, const Matrix& sigma, double gamma) {
  if (sigma.rows() != sigma.cols() || sigma.rows() != mu.size()) {
    throw PreconditionError("gaussian mgf: mu and Sigma dimensions disagree");
  }
  const Matrix a = Matrix::Identity(mu.size(), mu.size()) - 2.0 * gamma * sigma;
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) throw PreconditionError("gaussian mgf: I - 2 gamma Sigma is not positive definite");
  const Matrix& l = llt.matrixLLT();
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < l.rows(); ++i) log_det += 2.0 * std::log(l(i, i));
  return std::exp(-0.5 * log_det + gamma * mu.dot(llt.solve(mu)));
}

CouplingBounds coupling_bounds(double M, double G0, double beta, std::size_t d, std::size_t K, double eta) {
  CouplingBounds out;
  out.kl = M * M * (0.5 * beta * G0 + static_cast<double>(d)) * static_cast<double>(K) * eta * eta;
  out.tv_raw = std::sqrt(0.5 * out.kl);
  out.tv = std::min(out.tv_raw, 1.0);
  return out;
}

CouplingBounds kl_tv_coupling_bounds(const ProblemParams& params, std::size_t K, double eta, double beta) {
  const auto& k = params.constants;
  if (!(eta < 1.0 && eta < k.m / (k.M * k.M))) {
    throw PreconditionError("coupling bounds: eta < 1 and eta < m/M^2 required, eta = " + fmt(eta));
  }
  if (!(beta > 0.0)) throw PreconditionError("coupling bounds: beta must be > 0");
  return coupling_bounds(k.M, gradient_moment_G0(k, params.d, beta), beta, params.d, K, eta);
}

double event_B_bound(std::size_t K0, double G1, double M, double eta, double epsilon, std::size_t d, double beta,
                     double c_prime) {
  if (!(eta > 0.0) || !(beta > 0.0)) throw PreconditionError("event B bound: eta and beta must be > 0");
  const double dd = static_cast<double>(d);
  const double drift = 16.0 * G1 * M * M * M * eta * eta / (epsilon * epsilon) * std::exp(2.0 * M * eta);
  const double reflection =
      2.0 * dd * std::exp(-c_prime * beta * epsilon * epsilon / (M * dd * eta) * std::exp(-2.0 * M * eta));
  return static_cast<double>(K0) * (drift + reflection);
}

double event_B_bound(const ProblemParams& params, double eta, double beta) {
  const auto& k = params.constants;
  const std::size_t k0 = first_index_at_or_after(recurrence_time(params), eta);
  return event_B_bound(k0, position_moment_G1(k, params.d), k.M, eta, params.epsilon, params.d, beta,
                       params.c_prime);
}

double event_B_threshold(double epsilon, double M) { return epsilon / (2.0 * std::sqrt(M)); }

SubgaussianProxies subgaussian_proxies(const RegularityConstants& k) {
  SubgaussianProxies s;
  s.sigma1 = k.B + k.M * k.R;
  s.sigma0 = k.A + s.sigma1 * k.R;
  s.sigma2 = k.C + k.L * k.R;
  s.sigma = std::max({s.sigma0, s.sigma1, s.sigma2});
  return s;
}

double deviation_constant(const ProblemParams& params) {
  const auto& k = params.constants;
  const double sigma = subgaussian_proxies(k).sigma;
  const double scale = std::max({k.M, k.L, k.B + k.M * k.R});
  const double arg = scale * k.R * sigma / params.delta;
  const double log_term = arg > 0.0 ? std::log(arg) : -kInf;
  return params.c0 * std::max(1.0, log_term);
}

double deviation_threshold_value(double sigma, double c, std::size_t d, std::size_t n) {
  if (n < 2) throw PreconditionError("deviation threshold: n must be >= 2");
  const double nn = static_cast<double>(n);
  return sigma * std::sqrt(c * static_cast<double>(d) * std::log(nn) / nn);
}

DeviationThreshold deviation_threshold(const ProblemParams& params, std::size_t n) {
  params.validate();
  DeviationThreshold out;
  out.c = deviation_constant(params);
  const double dd = static_cast<double>(params.d);
  const double floor = out.c * dd * std::log(dd);
  if (n < 2 || static_cast<double>(n) < floor) {
    throw PreconditionError("n >= c d ln d violated: n = " + std::to_string(n) + ", floor = " + fmt(floor));
  }
  out.sigma = subgaussian_proxies(params.constants).sigma;
  out.risk = deviation_threshold_value(out.sigma, out.c, params.d, n);
  out.grad = out.risk;
  out.hess = out.risk;
  return out;
}

std::size_t theorem2_sample_floor(double c, double sigma, std::size_t d, double floor) {
  if (!(floor > 0.0) || !(c > 0.0) || !(sigma >= 0.0)) {
    throw PreconditionError("sample floor: requires c > 0, sigma >= 0, eps0 ^ m > 0");
  }
  const double dd = static_cast<double>(d);
  const double need_n = c * dd * std::log(dd);
  const double need_ratio = c * sigma * sigma * dd / (floor * floor);
  auto ok = [&](std::size_t n) {
    const double nn = static_cast<double>(n);
    return nn >= need_n && nn / std::log(nn) >= need_ratio;
  };
  // n / ln n increases for n >= 3, so the predicate is monotone from 3 on.
  std::size_t hi = 3;
  while (!ok(hi)) {
    if (hi > (std::size_t{1} << 62)) throw ConvergenceError("sample floor exceeds 2^62");
    hi *= 2;
  }
  std::size_t lo = std::max<std::size_t>(3, hi / 2);
  if (ok(lo)) hi = lo;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (ok(mid)) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  if (hi == 3 && ok(2)) return 2;
  return hi;
}

std::size_t theorem2_sample_floor(const ProblemParams& params, double eps0, double m) {
  if (!(eps0 > 0.0) || !(m > 0.0)) throw PreconditionError("sample floor: eps0 and m must be > 0");
  return theorem2_sample_floor(deviation_constant(params), subgaussian_proxies(params.constants).sigma, params.d,
                               std::min(eps0, m));
}

std::size_t first_index_at_or_after(double time, double eta) {
  if (!(eta > 0.0)) throw PreconditionError("iteration window: eta must be > 0");
  return static_cast<std::size_t>(std::max(0.0, std::ceil(time / eta - 1e-9)));
}

std::size_t last_index_at_or_before(double time, double eta) {
  if (!(eta > 0.0)) throw PreconditionError("iteration window: eta must be > 0");
  return static_cast<std::size_t>(std::max(0.0, std::floor(time / eta + 1e-9)));
}

TheoryBounds compute_theory_bounds(const ProblemParams& params) {
  const AdmissiblePair pair = admissible_eta_beta(params);
  const auto& k = params.constants;
  TheoryBounds out;
  out.T_rec = recurrence_time(params);
  out.T_esc = out.T_rec + params.T;
  out.eta_max = pair.eta_max;
  out.beta_min = pair.beta_min;
  out.G0 = pair.G0;
  out.G1 = pair.G1;
  out.fixpoint_iterations = pair.iterations;
  const auto s = subgaussian_proxies(k);
  out.sigma0 = s.sigma0;
  out.sigma1 = s.sigma1;
  out.sigma2 = s.sigma2;
  out.sigma = s.sigma;
  out.K = last_index_at_or_before(out.T_esc, out.eta_max);
  out.K0 = first_index_at_or_after(out.T_rec, out.eta_max);
  const auto coupling = kl_tv_coupling_bounds(params, out.K, out.eta_max, out.beta_min);
  out.kl_bound = coupling.kl;
  out.tv_bound_raw = coupling.tv_raw;
  out.tv_bound = coupling.tv;
  out.event_B_bound = event_B_bound(params, out.eta_max, out.beta_min);
  out.event_B_threshold = event_B_threshold(params.epsilon, k.M);
  out.proposition1_epsilon_in_range =
      params.epsilon < proposition1_epsilon_ceiling(k) && params.epsilon <= 8.0 * params.r;
  out.proposition1_beta_min = proposition1_beta_threshold(params.epsilon, params.d, k.M, params.T, params.delta);
  out.deviation_c = deviation_constant(params);
  out.sample_size_min = theorem2_sample_floor(params, params.eps0, k.m);
  return out;
}

std::vector<BoundField> describe_bounds(const TheoryBounds& b) {
  auto i = [](std::size_t v) { return static_cast<double>(v); };
  return {
      {"T_rec", "recurrence time (2/m) ln(8r/eps)", b.T_rec, false},
      {"T_esc", "escape time T_rec + T", b.T_esc, false},
      {"eta_max", "step-size condition, metastability theorem", b.eta_max, false},
      {"beta_min", "inverse-temperature condition, metastability theorem", b.beta_min, false},
      {"G0", "gradient second-moment bound", b.G0, false},
      {"G1", "iterate second-moment bound", b.G1, false},
      {"sigma0", "risk subgaussian proxy A + (B+MR)R", b.sigma0, false},
      {"sigma1", "gradient subgaussian proxy B + MR", b.sigma1, false},
      {"sigma2", "Hessian subgaussian proxy C + LR", b.sigma2, false},
      {"sigma", "uniform deviation proxy (max)", b.sigma, false},
      {"K", "iterations floor(T_esc/eta)", i(b.K), true},
      {"K0", "recurrence iterations ceil(T_rec/eta)", i(b.K0), true},
      {"kl_bound", "Girsanov relative-entropy bound", b.kl_bound, false},
      {"tv_bound_raw", "Pinsker total-variation bound (raw)", b.tv_bound_raw, false},
      {"tv_bound", "Pinsker total-variation bound (clamped)", b.tv_bound, false},
      {"event_B_bound", "inter-grid oscillation probability bound", b.event_B_bound, false},
      {"event_B_threshold", "inter-grid oscillation threshold eps/(2 sqrt M)", b.event_B_threshold, false},
      {"proposition1_beta_min", "diffusion stopping-time inverse-temperature threshold", b.proposition1_beta_min,
       false},
      {"proposition1_epsilon_in_range", "diffusion stopping-time epsilon range holds",
       b.proposition1_epsilon_in_range ? 1.0 : 0.0, true},
      {"deviation_c", "uniform deviation constant c", b.deviation_c, false},
      {"sample_size_min", "a-posteriori bound sample-size floor", i(b.sample_size_min), true},
      {"fixpoint_iterations", "(eta, beta) fixpoint passes", i(b.fixpoint_iterations), true},
  };
}

}  // namespace metastab
