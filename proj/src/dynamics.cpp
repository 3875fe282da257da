#include "metastab/dynamics.hpp"

#include <cmath>
#include <span>

#include "metastab/errors.hpp"
#include "metastab/rng.hpp"

namespace metastab {

std::string to_string(TrajectoryKind kind) {
  switch (kind) {
    case TrajectoryKind::discrete:
      return "discrete";
    case TrajectoryKind::diffusion_proxy:
      return "diffusion_proxy";
    case TrajectoryKind::exact_ou:
      return "exact_ou";
  }
  return "unknown";
}

TrajectoryKind parse_trajectory_kind(const std::string& name) {
  if (name == "discrete") return TrajectoryKind::discrete;
  if (name == "diffusion_proxy") return TrajectoryKind::diffusion_proxy;
  if (name == "exact_ou") return TrajectoryKind::exact_ou;
  throw PreconditionError("unknown trajectory kind '" + name + "'");
}

void LangevinConfig::validate(std::size_t dimension) const {
  if (!(eta >= 0.0) || !std::isfinite(eta)) throw PreconditionError("langevin config: eta must be finite and >= 0");
  if (!noiseless && (!(beta > 0.0) || !std::isfinite(beta))) {
    throw PreconditionError("langevin config: beta must be finite and > 0 (use the noiseless flag for beta = inf)");
  }
  if (horizon_K < 1) throw PreconditionError("langevin config: horizon_K must be >= 1");
  if (noise_substeps < 1) throw PreconditionError("langevin config: noise_substeps must be >= 1");
  if (static_cast<std::size_t>(initial_point.size()) != dimension) {
    throw PreconditionError("langevin config: initial point has the wrong dimension");
  }
  if (!initial_point.allFinite()) throw PreconditionError("langevin config: initial point must be finite");
}

namespace {

/// Writes the (possibly aggregated) standard Gaussian vector of step `index`.
class NoiseDraw {
 public:
  NoiseDraw(std::uint64_t seed, std::size_t dimension, std::uint32_t substeps)
      : stream_(seed), substeps_(substeps), tmp_(static_cast<Eigen::Index>(dimension)) {}

  void operator()(std::uint64_t index, Vector& out) {
    if (substeps_ == 1) {
      stream_.fill(index, std::span<double>(out.data(), static_cast<std::size_t>(out.size())));
      return;
    }
    out.setZero();
    for (std::uint32_t s = 0; s < substeps_; ++s) {
      stream_.fill(index * substeps_ + s, std::span<double>(tmp_.data(), static_cast<std::size_t>(tmp_.size())));
      out += tmp_;
    }
    out /= std::sqrt(static_cast<double>(substeps_));
  }

 private:
  NoiseStream stream_;
  std::uint32_t substeps_;
  Vector tmp_;
};

/// One Euler step shared by the discrete algorithm and the proxy.
struct EulerKernel {
  const Landscape& landscape;
  double step;
  double scale;
  bool noiseless;
  NoiseDraw noise;
  Vector g;
  Vector xi;

  EulerKernel(const Landscape& l, const LangevinConfig& c, double h)
      : landscape(l),
        step(h),
        scale(c.noiseless ? 0.0 : std::sqrt(2.0 * h / c.beta)),
        noiseless(c.noiseless),
        noise(c.seed, l.dimension(), c.noise_substeps),
        g(static_cast<Eigen::Index>(l.dimension())),
        xi(static_cast<Eigen::Index>(l.dimension())) {}

  void advance(Vector& w, std::uint64_t index) {
    landscape.gradient_into(w, g);
    w -= step * g;
    if (!noiseless) {
      noise(index, xi);
      w += scale * xi;
    }
  }
};

std::size_t stream_euler(const Landscape& landscape, const LangevinConfig& config, std::uint32_t substeps,
                         const StepObserver& observer) {
  config.validate(landscape.dimension());
  const double h = config.eta / static_cast<double>(substeps);
  EulerKernel kernel(landscape, config, h);
  Vector w = config.initial_point;
  if (!observer(0, 0.0, w)) return 1;
  const std::uint64_t total = static_cast<std::uint64_t>(config.horizon_K) * substeps;
  for (std::uint64_t i = 0; i < total; ++i) {
    kernel.advance(w, i);
    if (!w.allFinite()) throw DivergenceError(i + 1, "langevin iterate became non-finite");
    const double t = static_cast<double>(i + 1) * config.eta / static_cast<double>(substeps);
    if (!observer(i + 1, t, w)) return i + 2;
  }
  return total + 1;
}

Trajectory collect(TrajectoryKind kind, const LangevinConfig& config, std::uint32_t substeps, std::size_t dimension,
                   const std::function<std::size_t(const StepObserver&)>& run) {
  Trajectory traj;
  traj.kind = kind;
  traj.config = config;
  traj.substep_factor = substeps;
  const std::size_t count = config.horizon_K * substeps + 1;
  traj.times.resize(count);
  traj.points.resize(static_cast<Eigen::Index>(dimension), static_cast<Eigen::Index>(count));
  run([&](std::size_t i, double t, const Vector& w) {
    traj.times[i] = t;
    traj.points.col(static_cast<Eigen::Index>(i)) = w;
    return true;
  });
  return traj;
}

}  // namespace

std::size_t stream_discrete_langevin(const Landscape& landscape, const LangevinConfig& config,
                                     const StepObserver& observer) {
  return stream_euler(landscape, config, 1, observer);
}

Trajectory run_discrete_langevin(const Landscape& landscape, const LangevinConfig& config) {
  config.validate(landscape.dimension());
  return collect(TrajectoryKind::discrete, config, 1, landscape.dimension(),
                 [&](const StepObserver& obs) { return stream_discrete_langevin(landscape, config, obs); });
}

std::size_t stream_diffusion_proxy(const Landscape& landscape, const LangevinConfig& config,
                                   std::uint32_t substep_factor, const StepObserver& observer) {
  if (substep_factor < 1) throw PreconditionError("diffusion proxy: substep_factor must be >= 1");
  return stream_euler(landscape, config, substep_factor, observer);
}

Trajectory run_diffusion_proxy(const Landscape& landscape, const LangevinConfig& config,
                               std::uint32_t substep_factor) {
  if (substep_factor < 1) throw PreconditionError("diffusion proxy: substep_factor must be >= 1");
  config.validate(landscape.dimension());
  return collect(TrajectoryKind::diffusion_proxy, config, substep_factor, landscape.dimension(),
                 [&](const StepObserver& obs) { return stream_diffusion_proxy(landscape, config, substep_factor, obs); });
}

// ---------------------------------------------------------------------------
// Ornstein-Uhlenbeck linearization

OULinearization::OULinearization(Vector c, Matrix h, double curvature_floor)
    : center(std::move(c)), H(std::move(h)), eig(H) {
  if (H.rows() != H.cols() || H.rows() != center.size() || center.size() == 0) {
    throw PreconditionError("OU linearization: H must be square and match the center");
  }
  if (!H.isApprox(H.transpose(), 1e-12)) throw PreconditionError("OU linearization: H must be symmetric");
  if (!(eig.values(0) > 0.0) || eig.values(0) < curvature_floor) {
    throw PreconditionError("OU linearization: eigenvalues of H must be positive and >= m");
  }
  H_sqrt = eig.apply([](double x) { return std::sqrt(x); });
}

OULinearization OULinearization::from_minimum(const LocalMinimum& minimum, double curvature_floor) {
  return OULinearization(minimum.location, minimum.hessian, curvature_floor);
}

Matrix OULinearization::decay(double t) const {
  return eig.apply([t](double x) { return std::exp(-t * x); });
}

std::size_t stream_exact_ou(const OULinearization& lin, const LangevinConfig& config, const StepObserver& observer) {
  const std::size_t d = lin.dimension();
  config.validate(d);
  const Matrix a = lin.decay(config.eta);
  Matrix b = lin.eig.vectors;
  if (!config.noiseless) {
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
      const double lam = lin.eig.values(j);
      b.col(j) *= std::sqrt(-std::expm1(-2.0 * config.eta * lam) / (config.beta * lam));
    }
  }
  NoiseDraw noise(config.seed, d, config.noise_substeps);
  Vector y = config.initial_point - lin.center;
  Vector next(static_cast<Eigen::Index>(d));
  Vector xi(static_cast<Eigen::Index>(d));
  Vector w = config.initial_point;
  if (!observer(0, 0.0, w)) return 1;
  for (std::size_t k = 0; k < config.horizon_K; ++k) {
    next.noalias() = a * y;
    if (!config.noiseless) {
      noise(k, xi);
      next.noalias() += b * xi;
    }
    y.swap(next);
    w = lin.center + y;
    if (!w.allFinite()) throw DivergenceError(k + 1, "OU iterate became non-finite");
    if (!observer(k + 1, static_cast<double>(k + 1) * config.eta, w)) return k + 2;
  }
  return config.horizon_K + 1;
}

Trajectory run_exact_ou(const OULinearization& lin, const LangevinConfig& config) {
  config.validate(lin.dimension());
  return collect(TrajectoryKind::exact_ou, config, 1, lin.dimension(),
                 [&](const StepObserver& obs) { return stream_exact_ou(lin, config, obs); });
}

GaussianMarginal ou_marginal(const OULinearization& lin, const Vector& y0, double t, double beta) {
  if (!(t >= 0.0)) throw PreconditionError("ou_marginal: t must be >= 0");
  if (!(beta > 0.0)) throw PreconditionError("ou_marginal: beta must be > 0");
  if (y0.size() != lin.center.size()) throw PreconditionError("ou_marginal: y0 has the wrong dimension");
  GaussianMarginal out;
  out.mean = lin.decay(t) * y0;
  out.covariance = lin.eig.apply([t, beta](double x) { return -std::expm1(-2.0 * t * x) / (beta * x); });
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
  return out;
}

Matrix matrix_flow_Q(const OULinearization& lin, double t0, double t) {
  if (!(t0 >= 0.0) || !(t >= t0)) throw PreconditionError("matrix_flow_Q: requires t >= t0 >= 0");
  const double s = t0 - t;
  return lin.eig.apply([s](double x) { return std::sqrt(x) * std::exp(s * x); });
}

}  // namespace metastab
