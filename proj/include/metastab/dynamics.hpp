#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "metastab/landscape.hpp"
#include "metastab/linalg.hpp"

namespace metastab {

enum class TrajectoryKind : std::uint8_t { discrete = 0, diffusion_proxy = 1, exact_ou = 2 };

std::string to_string(TrajectoryKind kind);
TrajectoryKind parse_trajectory_kind(const std::string& name);

struct LangevinConfig {
  double eta = 0.01;
  double beta = 1.0;
  /// beta = infinity: the noise term is dropped and `beta` is ignored.
  bool noiseless = false;
  std::size_t horizon_K = 1;
  Vector initial_point;
  std::uint64_t seed = 0;
  /// Step k draws xi_k = (g(kq) + ... + g(kq + q - 1)) / sqrt(q) from the
  /// counter-based stream. With q = 2 a step of size eta consumes the same
  /// Brownian increments as two steps of size eta/2 with q = 1.
  std::uint32_t noise_substeps = 1;

  /// Throws PreconditionError unless eta >= 0, beta > 0 (or noiseless),
  /// horizon_K >= 1, noise_substeps >= 1 and the initial point is finite and
  /// of length `dimension`.
  void validate(std::size_t dimension) const;
};

/// Iterates stored column-wise: points.col(i) is the state at times[i].
struct Trajectory {
  TrajectoryKind kind = TrajectoryKind::discrete;
  std::vector<double> times;
  Matrix points;
  LangevinConfig config;
  std::uint32_t substep_factor = 1;

  std::size_t size() const { return times.size(); }
  std::size_t dimension() const { return static_cast<std::size_t>(points.rows()); }
};

/// Receives (index, time, state) for every recorded point, starting with the
/// initial point at index 0. Returning false stops the simulation.
using StepObserver = std::function<bool(std::size_t, double, const Vector&)>;

/// W_{k+1} = W_k - eta grad F(W_k) + sqrt(2 eta / beta) xi_k for k < horizon_K.
/// Returns the number of points delivered. Throws DivergenceError carrying the
/// index of the first non-finite iterate.
std::size_t stream_discrete_langevin(const Landscape& landscape, const LangevinConfig& config,
                                     const StepObserver& observer);
Trajectory run_discrete_langevin(const Landscape& landscape, const LangevinConfig& config);

/// Euler-Maruyama with inner step eta / substep_factor over horizon_K outer
/// steps, recording every inner point. Inner step i uses the noise of index i,
/// so substep_factor = 1 coincides bit-for-bit with the discrete algorithm.
std::size_t stream_diffusion_proxy(const Landscape& landscape, const LangevinConfig& config,
                                   std::uint32_t substep_factor, const StepObserver& observer);
Trajectory run_diffusion_proxy(const Landscape& landscape, const LangevinConfig& config,
                               std::uint32_t substep_factor = 16);

/// Linearization of the dynamics at a nondegenerate local minimum.
struct OULinearization {
  Vector center;
  Matrix H;
  Matrix H_sqrt;
  SymmetricEigen eig;

  /// Throws PreconditionError unless H is symmetric with every eigenvalue
  /// >= curvature_floor (and > 0).
  OULinearization(Vector center, Matrix H, double curvature_floor = 0.0);

  static OULinearization from_minimum(const LocalMinimum& minimum, double curvature_floor = 0.0);

  std::size_t dimension() const { return static_cast<std::size_t>(center.size()); }
  double min_eigenvalue() const { return eig.values(0); }
  double max_eigenvalue() const { return eig.values(eig.values.size() - 1); }
  /// e^{-tH}.
  Matrix decay(double t) const;
  /// ||v||_H.
  double h_norm(const Vector& v) const { return weighted_norm(v, H); }
};

/// Samples Y_{k+1} | Y_k ~ N(e^{-eta H} Y_k, (beta H)^{-1}(I - e^{-2 eta H})) exactly
/// and reports W = center + Y. The initial point is W_0 (not Y_0).
std::size_t stream_exact_ou(const OULinearization& lin, const LangevinConfig& config, const StepObserver& observer);
Trajectory run_exact_ou(const OULinearization& lin, const LangevinConfig& config);

struct GaussianMarginal {
  Vector mean;
  Matrix covariance;
};

/// Law of Y_t started at y0: N(e^{-tH} y0, (beta H)^{-1}(I - e^{-2tH})). H^{1/2} Y_t has covariance
/// (1/beta)(I - e^{-2tH}).
GaussianMarginal ou_marginal(const OULinearization& lin, const Vector& y0, double t, double beta);

/// Q_{t0}(t) = H^{1/2} e^{(t0 - t) H}. Requires t >= t0 >= 0.
Matrix matrix_flow_Q(const OULinearization& lin, double t0, double t);

}  // namespace metastab
