#include "metastab/landscape.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "metastab/errors.hpp"
#include "metastab/stats.hpp"

namespace metastab {

namespace {

std::string format_vector(const Vector& v) {
  std::ostringstream os;
  os << std::setprecision(17) << '[';
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? "," : "") << v(i);
  os << ']';
  return os.str();
}

double halton(std::size_t index, std::size_t base) {
  double f = 1.0, r = 0.0;
  while (index > 0) {
    f /= static_cast<double>(base);
    r += f * static_cast<double>(index % base);
    index /= base;
  }
  return r;
}

constexpr std::array<std::size_t, 8> kPrimes{2, 3, 5, 7, 11, 13, 17, 19};

}  // namespace

// ---------------------------------------------------------------------------
// RegularityConstants

void RegularityConstants::validate() const {
  for (double v : {A, B, C, M, L, m, b, R}) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw PreconditionError("regularity constants must be finite and nonnegative");
  }
  if (!(M > 0.0) || !(L > 0.0) || !(m > 0.0)) throw PreconditionError("regularity constants need M > 0, L > 0, m > 0");
  if (R * R * m > b * (1.0 + 1e-12) + 1e-300) throw PreconditionError("regularity constants: R^2 m exceeds b");
}

RegularityConstants RegularityConstants::with_radius(double A, double B, double C, double M, double L, double m,
                                                     double b) {
  RegularityConstants k{A, B, C, M, L, m, b, std::sqrt(b / m)};
  k.validate();
  return k;
}

// ---------------------------------------------------------------------------
// QuadraticLandscape

QuadraticLandscape::QuadraticLandscape(Matrix p, Vector q, double offset, RegularityConstants constants,
                                       std::string family, LandscapePtr population)
    : Landscape(constants, std::move(population)),
      p_(std::move(p)),
      q_(std::move(q)),
      offset_(offset),
      family_(std::move(family)) {
  if (p_.rows() != p_.cols() || p_.rows() != q_.size() || q_.size() == 0) {
    throw PreconditionError("quadratic landscape: curvature must be square and match the linear term");
  }
  if (!p_.isApprox(p_.transpose(), 1e-12)) throw PreconditionError("quadratic landscape: curvature must be symmetric");
}

double QuadraticLandscape::value(const Vector& w) const {
  return 0.5 * w.dot(p_ * w) - q_.dot(w) + offset_;
}

void QuadraticLandscape::gradient_into(const Vector& w, Vector& out) const {
  out.noalias() = p_ * w;
  out -= q_;
}

// ---------------------------------------------------------------------------
// DoubleWellLandscape

namespace {

RegularityConstants double_well_constants(double s) {
  // (m, b) = (s/2, 9s/16): <w, grad F> - (s/2)||w||^2 = s(w1^4 - 1.5 w1^2) + (s/2) sum_{j>=2} w_j^2,
  // minimized at w1^2 = 3/4 with value -9s/16.
  const double m = 0.5 * s;
  const double b = 0.5625 * s;
  const double R = std::sqrt(b / m);
  const double ball = 2.0 * R;  // constants are certified on B(2R)
  const double M = s * std::max(3.0 * ball * ball - 1.0, 1.0);
  const double L = 6.0 * s * ball;
  return RegularityConstants::with_radius(0.25 * s, 0.0, s, M, L, m, b);
}

}  // namespace

DoubleWellLandscape::DoubleWellLandscape(std::size_t dimension, double barrier_scale)
    : Landscape(double_well_constants(barrier_scale)), dimension_(dimension), scale_(barrier_scale) {
  if (dimension == 0) throw PreconditionError("double well: dimension must be positive");
  if (!(barrier_scale > 0.0)) throw PreconditionError("double well: barrier_scale must be positive");
}

double DoubleWellLandscape::value(const Vector& w) const {
  const double a = w(0) * w(0) - 1.0;
  double rest = 0.0;
  for (std::size_t j = 1; j < dimension_; ++j) rest += w(static_cast<Eigen::Index>(j)) * w(static_cast<Eigen::Index>(j));
  return scale_ * (0.25 * a * a + 0.5 * rest);
}

void DoubleWellLandscape::gradient_into(const Vector& w, Vector& out) const {
  const double x = w(0);
  out(0) = scale_ * (x * x * x - x);
  for (std::size_t j = 1; j < dimension_; ++j) {
    const auto i = static_cast<Eigen::Index>(j);
    out(i) = scale_ * w(i);
  }
}

Matrix DoubleWellLandscape::hessian(const Vector& w) const {
  const auto d = static_cast<Eigen::Index>(dimension_);
  Matrix h = Matrix::Identity(d, d) * scale_;
  h(0, 0) = scale_ * (3.0 * w(0) * w(0) - 1.0);
  return h;
}

// ---------------------------------------------------------------------------
// Datasets

void write_dataset_csv(const Dataset& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << std::setprecision(17);
  for (Eigen::Index j = 0; j < data.samples.cols(); ++j) out << (j ? "," : "") << "z_" << (j + 1);
  out << '\n';
  for (Eigen::Index i = 0; i < data.samples.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.samples.cols(); ++j) out << (j ? "," : "") << data.samples(i, j);
    out << '\n';
  }
  if (!out) throw std::runtime_error("failed writing " + path);
}

double TruncatedGaussianLaw::support_radius() const {
  return mean.norm() + truncation * std::sqrt(static_cast<double>(dimension()));
}

double TruncatedGaussianLaw::second_moment() const {
  return mean.squaredNorm() + static_cast<double>(dimension()) * truncated_normal_variance(truncation);
}

Dataset TruncatedGaussianLaw::draw(std::size_t n, std::uint64_t seed) const {
  if (!(truncation > 0.0)) throw PreconditionError("truncated Gaussian law: truncation must be positive");
  const auto d = static_cast<Eigen::Index>(dimension());
  Dataset data;
  data.samples.resize(static_cast<Eigen::Index>(n), d);
  Rng rng(seed);
  for (Eigen::Index i = 0; i < data.samples.rows(); ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      double t;
      do {
        t = rng.normal();
      } while (std::abs(t) > truncation);
      data.samples(i, j) = mean(j) + t;
    }
  }
  std::ostringstream law;
  law << std::setprecision(17) << "truncated_gaussian(mean=" << format_vector(mean) << ",truncation=" << truncation
      << ")";
  data.law = law.str();
  data.seed = seed;
  data.support_radius = support_radius();
  return data;
}

Dataset PerturbedQuadraticLaw::draw(std::size_t n, std::uint64_t seed) const {
  const auto d = static_cast<Eigen::Index>(dimension());
  Dataset data;
  data.samples.resize(static_cast<Eigen::Index>(n), 2 * d);
  Rng rng(seed);
  for (Eigen::Index i = 0; i < data.samples.rows(); ++i) {
    for (Eigen::Index j = 0; j < d; ++j) data.samples(i, j) = rng.uniform(-curvature_spread, curvature_spread);
    for (Eigen::Index j = 0; j < d; ++j) data.samples(i, d + j) = rng.uniform(-tilt_spread, tilt_spread);
  }
  std::ostringstream law;
  law << std::setprecision(17) << "perturbed_quadratic(curvatures=" << format_vector(curvatures)
      << ",curvature_spread=" << curvature_spread << ",tilt_spread=" << tilt_spread << ")";
  data.law = law.str();
  data.seed = seed;
  data.support_radius =
      std::sqrt(static_cast<double>(d) * (curvature_spread * curvature_spread + tilt_spread * tilt_spread));
  return data;
}

// ---------------------------------------------------------------------------
// Gaussian-location ERM

namespace {

RegularityConstants gaussian_location_constants(double support, double ridge, double lipschitz) {
  // f(w, z) = 1/2 ||w - z||^2 + ridge ||w||^2, kappa = 1 + 2 ridge:
  //   |f(0,z)| = ||z||^2 / 2, grad f(0,z) = -z, hess f = kappa I,
  //   <w, kappa w - zbar> >= (kappa/2)||w||^2 - support^2 / (2 kappa).
  const double kappa = 1.0 + 2.0 * ridge;
  return RegularityConstants::with_radius(0.5 * support * support, support, kappa, kappa, lipschitz, 0.5 * kappa,
                                          support * support / (2.0 * kappa));
}

}  // namespace

LandscapePtr gaussian_location_population(const TruncatedGaussianLaw& law, double ridge, double hessian_lipschitz) {
  if (!(ridge >= 0.0)) throw PreconditionError("gaussian location: ridge must be nonnegative");
  const auto d = static_cast<Eigen::Index>(law.dimension());
  const double kappa = 1.0 + 2.0 * ridge;
  return std::make_shared<QuadraticLandscape>(
      Matrix::Identity(d, d) * kappa, law.mean, 0.5 * law.second_moment(),
      gaussian_location_constants(law.support_radius(), ridge, hessian_lipschitz), "gaussian_location_population");
}

LandscapePtr build_gaussian_location_erm(const Dataset& dataset, double ridge, const TruncatedGaussianLaw* law,
                                         double hessian_lipschitz) {
  if (dataset.size() == 0 || dataset.samples.cols() == 0) throw PreconditionError("gaussian location: empty dataset");
  if (!(ridge >= 0.0)) throw PreconditionError("gaussian location: ridge must be nonnegative");
  const Eigen::Index d = dataset.samples.cols();
  const double n = static_cast<double>(dataset.size());
  const Vector mean = dataset.samples.colwise().sum().transpose() / n;
  const double mean_sq = dataset.samples.rowwise().squaredNorm().sum() / n;
  double support = dataset.support_radius;
  if (!(support > 0.0)) support = dataset.samples.rowwise().norm().maxCoeff();
  const double kappa = 1.0 + 2.0 * ridge;
  LandscapePtr population;
  if (law != nullptr) population = gaussian_location_population(*law, ridge, hessian_lipschitz);
  return std::make_shared<QuadraticLandscape>(Matrix::Identity(d, d) * kappa, mean, 0.5 * mean_sq,
                                              gaussian_location_constants(support, ridge, hessian_lipschitz),
                                              "gaussian_location", std::move(population));
}

GaussianLocationFamily::GaussianLocationFamily(TruncatedGaussianLaw law, double ridge, double hessian_lipschitz)
    : law_(std::move(law)),
      ridge_(ridge),
      lipschitz_(hessian_lipschitz),
      population_(gaussian_location_population(law_, ridge, hessian_lipschitz)) {}

LandscapePtr GaussianLocationFamily::empirical(const Dataset& data) const {
  return build_gaussian_location_erm(data, ridge_, &law_, lipschitz_);
}

// ---------------------------------------------------------------------------
// Perturbed quadratic ERM

PerturbedQuadraticFamily::PerturbedQuadraticFamily(PerturbedQuadraticLaw law, double hessian_lipschitz)
    : law_(std::move(law)) {
  const auto d = static_cast<Eigen::Index>(law_.dimension());
  if (d == 0) throw PreconditionError("perturbed quadratic: empty curvature vector");
  const double kmin = law_.curvatures.minCoeff();
  const double kmax = law_.curvatures.maxCoeff();
  const double gap = kmin - law_.curvature_spread;
  if (!(gap > 0.0)) {
    throw PreconditionError("perturbed quadratic: curvature_spread must stay below the smallest curvature");
  }
  const double B = law_.tilt_spread * std::sqrt(static_cast<double>(d));
  // <w, (K + diag u) w - v> >= gap ||w||^2 - B ||w|| >= (gap/2)||w||^2 - B^2 / (2 gap).
  constants_ = RegularityConstants::with_radius(0.0, B, kmax + law_.curvature_spread, kmax + law_.curvature_spread,
                                                hessian_lipschitz, 0.5 * gap, B * B / (2.0 * gap));
  population_ = std::make_shared<QuadraticLandscape>(Matrix(law_.curvatures.asDiagonal()), Vector::Zero(d), 0.0,
                                                      constants_, "perturbed_quadratic_population");
}

LandscapePtr PerturbedQuadraticFamily::empirical(const Dataset& data) const {
  const auto d = static_cast<Eigen::Index>(law_.dimension());
  if (data.size() == 0 || data.samples.cols() != 2 * d) throw PreconditionError("perturbed quadratic: bad dataset shape");
  const double n = static_cast<double>(data.size());
  const Vector means = data.samples.colwise().sum().transpose() / n;
  Matrix p = law_.curvatures.asDiagonal();
  p.diagonal() += means.head(d);
  return std::make_shared<QuadraticLandscape>(std::move(p), means.tail(d), 0.0, constants_, "perturbed_quadratic",
                                              population_);
}

// ---------------------------------------------------------------------------
// Builders

LandscapePtr build_quadratic(const Matrix& curvature, double dissipativity_offset, double hessian_lipschitz) {
  if (curvature.rows() != curvature.cols() || curvature.rows() == 0) {
    throw PreconditionError("quadratic: curvature must be a nonempty square matrix");
  }
  if (!(dissipativity_offset >= 0.0)) throw PreconditionError("quadratic: dissipativity offset must be nonnegative");
  const SymmetricEigen eig(curvature);
  const double lo = eig.values.minCoeff();
  const double hi = eig.values.maxCoeff();
  if (!(lo > 0.0)) throw PreconditionError("quadratic: curvature must be positive definite");
  const auto constants =
      RegularityConstants::with_radius(0.0, 0.0, hi, hi, hessian_lipschitz, lo, dissipativity_offset);
  return std::make_shared<QuadraticLandscape>(curvature, Vector::Zero(curvature.rows()), 0.0, constants, "quadratic");
}

LandscapePtr build_quadratic(const Vector& curvatures, double dissipativity_offset, double hessian_lipschitz) {
  return build_quadratic(Matrix(curvatures.asDiagonal()), dissipativity_offset, hessian_lipschitz);
}

std::shared_ptr<const DoubleWellLandscape> build_double_well(std::size_t dimension, double barrier_scale) {
  return std::make_shared<DoubleWellLandscape>(dimension, barrier_scale);
}

// ---------------------------------------------------------------------------
// Local minima

LocalMinimum find_local_minimum(const Landscape& landscape, const Vector& start, const MinimumSearchOptions& options) {
  const auto d = static_cast<Eigen::Index>(landscape.dimension());
  if (start.size() != d) throw PreconditionError("find_local_minimum: start has the wrong dimension");
  if (!(options.tolerance > 0.0)) throw PreconditionError("find_local_minimum: tolerance must be positive");
  const auto& k = landscape.constants();
  if (!options.allow_start_outside_ball && start.norm() > k.R * (1.0 + 1e-12) + 1e-15) {
    throw PreconditionError("find_local_minimum: start lies outside B(R)");
  }

  Vector w = start;
  Vector g(d);
  landscape.gradient_into(w, g);
  const double step = 1.0 / k.M;
  const double handoff = std::max(1e-4, options.tolerance);
  for (std::size_t it = 0; it < options.max_descent_iterations && g.norm() > handoff; ++it) {
    w -= step * g;
    landscape.gradient_into(w, g);
  }

  std::size_t newton = 0;
  while (g.norm() > options.tolerance) {
    if (newton++ >= options.max_newton_iterations) {
      throw ConvergenceError("find_local_minimum: no convergence within the iteration budget");
    }
    const Matrix h = landscape.hessian(w);
    Eigen::LDLT<Matrix> ldlt(h);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive() && min_eigenvalue(h) > 0.0) {
      w -= ldlt.solve(g);
    } else {
      w -= step * g;
    }
    landscape.gradient_into(w, g);
    if (!w.allFinite()) throw ConvergenceError("find_local_minimum: iterate diverged");
  }

  LocalMinimum out;
  out.location = w;
  out.hessian = landscape.hessian(w);
  out.min_eigenvalue = min_eigenvalue(out.hessian);
  out.gradient_norm_residual = g.norm();
  const double floor = options.curvature_floor.value_or(k.m);
  if (out.min_eigenvalue < floor) {
    std::ostringstream os;
    os << "not nondegenerate per standing assumption: lambda_min(H) = " << out.min_eigenvalue << " < m = " << floor;
    throw DegenerateMinimumError(os.str());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Certificates

DissipativityReport check_dissipativity(const Landscape& landscape, double m, double b, std::size_t probe_count) {
  if (probe_count == 0) throw PreconditionError("check_dissipativity: probe_count must be positive");
  const std::size_t d = landscape.dimension();
  const auto di = static_cast<Eigen::Index>(d);
  DissipativityReport report;
  report.probe_count = probe_count;
  report.max_radius = 10.0 * std::max(1.0, (m > 0.0) ? std::sqrt(b / m) : 1.0);
  report.min_margin = std::numeric_limits<double>::infinity();
  Vector w(di), g(di), dir(di);
  for (std::size_t i = 0; i < probe_count; ++i) {
    const double radius =
        probe_count == 1 ? 0.0 : report.max_radius * static_cast<double>(i) / static_cast<double>(probe_count - 1);
    for (std::size_t j = 0; j < d; ++j) {
      dir(static_cast<Eigen::Index>(j)) = 2.0 * halton(i + 1, kPrimes[j % kPrimes.size()]) - 1.0;
    }
    const double nrm = dir.norm();
    if (nrm < 1e-12) {
      dir.setZero();
      dir(0) = 1.0;
    } else {
      dir /= nrm;
    }
    w = radius * dir;
    landscape.gradient_into(w, g);
    const double margin = w.dot(g) - m * w.squaredNorm() + b;
    if (margin < report.min_margin) {
      report.min_margin = margin;
      report.worst_point = w;
    }
  }
  report.pass = report.min_margin >= -1e-9;
  return report;
}

MorseReport certify_strongly_morse(const Landscape& landscape, double eps0, double m, std::size_t grid_resolution,
                                   std::optional<double> radius) {
  const std::size_t d = landscape.dimension();
  if (d > 3) throw PreconditionError("certify_strongly_morse: grid certification supports d <= 3 only");
  if (!(eps0 > 0.0) || !(m > 0.0)) throw PreconditionError("certify_strongly_morse: eps0 and m must be positive");
  if (grid_resolution == 0) throw PreconditionError("certify_strongly_morse: grid_resolution must be positive");
  const double rho = radius.value_or(landscape.constants().R);
  const auto di = static_cast<Eigen::Index>(d);

  MorseReport report;
  report.worst_min_abs_eigenvalue = std::numeric_limits<double>::infinity();
  Vector w(di), g(di);
  std::vector<std::size_t> idx(d, 0);
  auto coord = [&](std::size_t i) {
    return grid_resolution == 1 ? 0.0
                                : -rho + 2.0 * rho * static_cast<double>(i) / static_cast<double>(grid_resolution - 1);
  };
  for (;;) {
    for (std::size_t j = 0; j < d; ++j) w(static_cast<Eigen::Index>(j)) = coord(idx[j]);
    if (w.norm() <= rho * (1.0 + 1e-12)) {
      ++report.grid_points;
      landscape.gradient_into(w, g);
      if (g.norm() <= eps0) {
        ++report.near_stationary_points;
        const double lam = min_abs_eigenvalue(landscape.hessian(w));
        if (lam < report.worst_min_abs_eigenvalue) {
          report.worst_min_abs_eigenvalue = lam;
          report.worst_point = w;
        }
      }
    }
    std::size_t j = 0;
    while (j < d && ++idx[j] == grid_resolution) idx[j++] = 0;
    if (j == d) break;
  }
  report.pass = report.worst_min_abs_eigenvalue >= m;
  return report;
}

Vector sample_ball(Rng& rng, std::size_t dimension, double radius) {
  const auto d = static_cast<Eigen::Index>(dimension);
  Vector v(d);
  double nrm = 0.0;
  do {
    for (Eigen::Index j = 0; j < d; ++j) v(j) = rng.normal();
    nrm = v.norm();
  } while (nrm == 0.0);
  const double r = radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(dimension));
  return v * (r / nrm);
}

DerivativeCheckReport check_derivatives(const Landscape& landscape, double radius, std::size_t points,
                                        std::uint64_t seed) {
  const std::size_t d = landscape.dimension();
  const auto di = static_cast<Eigen::Index>(d);
  Rng rng(seed);
  DerivativeCheckReport report;
  report.points = points;
  Vector gp(di), gm(di);
  for (std::size_t p = 0; p < points; ++p) {
    const Vector w = sample_ball(rng, d, radius);
    const Vector g = landscape.gradient(w);
    const Matrix h = landscape.hessian(w);
    const double hv = 1e-5 * std::max(1.0, w.norm());
    const double hg = 1e-6 * std::max(1.0, w.norm());
    Vector g_fd(di);
    Matrix h_fd(di, di);
    for (Eigen::Index j = 0; j < di; ++j) {
      Vector e = Vector::Zero(di);
      e(j) = 1.0;
      g_fd(j) = (landscape.value(w + hv * e) - landscape.value(w - hv * e)) / (2.0 * hv);
      landscape.gradient_into(w + hg * e, gp);
      landscape.gradient_into(w - hg * e, gm);
      h_fd.col(j) = (gp - gm) / (2.0 * hg);
    }
    report.max_gradient_error =
        std::max(report.max_gradient_error, (g_fd - g).norm() / std::max(1.0, g.norm()));
    report.max_hessian_error = std::max(report.max_hessian_error, (h_fd - h).norm() / std::max(1.0, h.norm()));
  }
  return report;
}

LipschitzCheckReport check_lipschitz(const Landscape& landscape, double radius, std::size_t pairs,
                                     std::uint64_t seed) {
  const std::size_t d = landscape.dimension();
  const auto& k = landscape.constants();
  Rng rng(seed);
  LipschitzCheckReport report;
  report.pairs = pairs;
  for (std::size_t p = 0; p < pairs; ++p) {
    const Vector w = sample_ball(rng, d, radius);
    const Vector v = sample_ball(rng, d, radius);
    const double dist = (w - v).norm();
    if (dist == 0.0) continue;
    report.max_gradient_ratio =
        std::max(report.max_gradient_ratio, (landscape.gradient(w) - landscape.gradient(v)).norm() / (k.M * dist));
    report.max_hessian_ratio = std::max(report.max_hessian_ratio,
                                        spectral_norm(landscape.hessian(w) - landscape.hessian(v)) / (k.L * dist));
  }
  return report;
}

RemainderCheckReport check_linearization_remainder(const Landscape& landscape, const LocalMinimum& minimum,
                                                   std::size_t points, std::uint64_t seed) {
  const std::size_t d = landscape.dimension();
  const double L = landscape.constants().L;
  Rng rng(seed);
  RemainderCheckReport report;
  report.points = points;
  for (std::size_t p = 0; p < points; ++p) {
    const Vector u = sample_ball(rng, d, 1.0);
    const Vector g = landscape.gradient(minimum.location + u);
    const double remainder = (g - minimum.hessian * u).norm();
    const double slack = minimum.gradient_norm_residual + 1e-12 * (1.0 + g.norm());
    report.max_ratio = std::max(report.max_ratio, remainder / (0.5 * L * u.squaredNorm() + slack));
  }
  return report;
}

}  // namespace metastab
