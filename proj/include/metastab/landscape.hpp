#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "metastab/linalg.hpp"
#include "metastab/rng.hpp"

namespace metastab {

/// Regularity constants of a loss f(., z), uniform over samples z:
///   |f(0,z)| <= A, ||grad f(0,z)|| <= B, ||hess f(0,z)|| <= C,
///   M-Lipschitz gradients, L-Lipschitz Hessians, (m, b)-dissipativity,
///   and the critical-point radius R = sqrt(b / m).
struct RegularityConstants {
  double A = 0.0;
  double B = 0.0;
  double C = 0.0;
  double M = 1.0;
  double L = 1.0;
  double m = 1.0;
  double b = 0.0;
  double R = 0.0;

  /// Throws PreconditionError if a field is negative, M/L/m are not
  /// positive, or R^2 m exceeds b by more than 1e-12 relative.
  void validate() const;

  static RegularityConstants with_radius(double A, double B, double C, double M, double L, double m, double b);
};

/// Objective with exact derivatives. Implementations are immutable and
/// their evaluations are pure, so one instance can be shared by workers.
class Landscape {
 public:
  virtual ~Landscape() = default;

  virtual std::size_t dimension() const = 0;
  virtual double value(const Vector& w) const = 0;
  /// Writes grad F(w) into `out` (already sized to dimension()).
  virtual void gradient_into(const Vector& w, Vector& out) const = 0;
  virtual Matrix hessian(const Vector& w) const = 0;
  virtual std::string family() const = 0;

  Vector gradient(const Vector& w) const {
    Vector g(static_cast<Eigen::Index>(dimension()));
    gradient_into(w, g);
    return g;
  }

  const RegularityConstants& constants() const { return constants_; }

  /// Closed-form population risk, when this landscape is an empirical risk
  /// of a family whose population risk is known.
  std::shared_ptr<const Landscape> population() const { return population_; }
  std::optional<double> population_value(const Vector& w) const {
    if (!population_) return std::nullopt;
    return population_->value(w);
  }

 protected:
  explicit Landscape(RegularityConstants constants, std::shared_ptr<const Landscape> population = nullptr)
      : constants_(constants), population_(std::move(population)) {}

 private:
  RegularityConstants constants_;
  std::shared_ptr<const Landscape> population_;
};

using LandscapePtr = std::shared_ptr<const Landscape>;

/// F(w) = 1/2 <w, P w> - <q, w> + offset with symmetric P.
class QuadraticLandscape final : public Landscape {
 public:
  QuadraticLandscape(Matrix p, Vector q, double offset, RegularityConstants constants, std::string family,
                     LandscapePtr population = nullptr);

  std::size_t dimension() const override { return static_cast<std::size_t>(q_.size()); }
  double value(const Vector& w) const override;
  void gradient_into(const Vector& w, Vector& out) const override;
  Matrix hessian(const Vector&) const override { return p_; }
  std::string family() const override { return family_; }

  const Matrix& curvature() const { return p_; }
  const Vector& linear_term() const { return q_; }
  double offset() const { return offset_; }

 private:
  Matrix p_;
  Vector q_;
  double offset_;
  std::string family_;
};

/// F(w) = s * ((w_1^2 - 1)^2 / 4 + 1/2 sum_{j>=2} w_j^2): minima at w_1 = +-1,
/// saddle at the origin, barrier height s / 4.
class DoubleWellLandscape final : public Landscape {
 public:
  DoubleWellLandscape(std::size_t dimension, double barrier_scale);

  std::size_t dimension() const override { return dimension_; }
  double value(const Vector& w) const override;
  void gradient_into(const Vector& w, Vector& out) const override;
  Matrix hessian(const Vector& w) const override;
  std::string family() const override { return "double_well"; }

  double barrier_scale() const { return scale_; }
  double barrier_height() const { return 0.25 * scale_; }

 private:
  std::size_t dimension_;
  double scale_;
};

// ---------------------------------------------------------------------------
// Datasets and ERM families

/// n i.i.d. samples (one per row) with the description of the law they were
/// drawn from. `support_radius` bounds ||z|| under that law.
struct Dataset {
  Matrix samples;
  std::string law;
  std::uint64_t seed = 0;
  double support_radius = 0.0;

  std::size_t size() const { return static_cast<std::size_t>(samples.rows()); }
};

/// Writes one sample per row, comma separated, with a z_1..z_p header.
void write_dataset_csv(const Dataset& data, const std::string& path);

/// z = mean + t with t_j i.i.d. standard normal truncated to [-a, a].
struct TruncatedGaussianLaw {
  Vector mean;
  double truncation = 3.0;

  std::size_t dimension() const { return static_cast<std::size_t>(mean.size()); }
  double support_radius() const;
  /// E||z||^2.
  double second_moment() const;
  Dataset draw(std::size_t n, std::uint64_t seed) const;
};

/// Builds F_Z(w) = mean_i [1/2 ||w - z_i||^2] + ridge ||w||^2 from sufficient
/// statistics. Constants are certified over every dataset whose samples lie in
/// the ball of radius dataset.support_radius. When `law` is given the closed
/// form population risk is attached.
LandscapePtr build_gaussian_location_erm(const Dataset& dataset, double ridge,
                                         const TruncatedGaussianLaw* law = nullptr,
                                         double hessian_lipschitz = 1.0);

/// Population risk of the Gaussian-location loss under `law`.
LandscapePtr gaussian_location_population(const TruncatedGaussianLaw& law, double ridge,
                                          double hessian_lipschitz = 1.0);

/// f(w, z) = 1/2 <w, (K + diag(u)) w> - <v, w> with z = (u, v),
/// u_j ~ U[-curvature_spread, curvature_spread], v_j ~ U[-tilt_spread, tilt_spread],
/// K = diag(curvatures). Population risk is 1/2 <w, K w>.
struct PerturbedQuadraticLaw {
  Vector curvatures;
  double curvature_spread = 0.25;
  double tilt_spread = 0.5;

  std::size_t dimension() const { return static_cast<std::size_t>(curvatures.size()); }
  Dataset draw(std::size_t n, std::uint64_t seed) const;
};

/// A data law paired with its loss: draws datasets, builds empirical risks and
/// knows the population risk in closed form.
class ErmFamily {
 public:
  virtual ~ErmFamily() = default;
  virtual std::string name() const = 0;
  virtual std::size_t dimension() const = 0;
  virtual Dataset draw(std::size_t n, std::uint64_t seed) const = 0;
  virtual LandscapePtr empirical(const Dataset& data) const = 0;
  virtual LandscapePtr population() const = 0;
  /// Constants valid for every realization of the data.
  virtual RegularityConstants constants() const = 0;
};

class GaussianLocationFamily final : public ErmFamily {
 public:
  GaussianLocationFamily(TruncatedGaussianLaw law, double ridge = 0.0, double hessian_lipschitz = 1.0);
  std::string name() const override { return "gaussian_location"; }
  std::size_t dimension() const override { return law_.dimension(); }
  Dataset draw(std::size_t n, std::uint64_t seed) const override { return law_.draw(n, seed); }
  LandscapePtr empirical(const Dataset& data) const override;
  LandscapePtr population() const override { return population_; }
  RegularityConstants constants() const override { return population_->constants(); }

 private:
  TruncatedGaussianLaw law_;
  double ridge_;
  double lipschitz_;
  LandscapePtr population_;
};

class PerturbedQuadraticFamily final : public ErmFamily {
 public:
  explicit PerturbedQuadraticFamily(PerturbedQuadraticLaw law, double hessian_lipschitz = 1.0);
  std::string name() const override { return "perturbed_quadratic"; }
  std::size_t dimension() const override { return law_.dimension(); }
  Dataset draw(std::size_t n, std::uint64_t seed) const override { return law_.draw(n, seed); }
  LandscapePtr empirical(const Dataset& data) const override;
  LandscapePtr population() const override { return population_; }
  RegularityConstants constants() const override { return constants_; }

 private:
  PerturbedQuadraticLaw law_;
  RegularityConstants constants_;
  LandscapePtr population_;
};

// ---------------------------------------------------------------------------
// Builders

/// F(w) = 1/2 <w, A w> with A = diag(curvatures). m = min curvature,
/// b = dissipativity_offset (any b >= 0 is valid), L is a declared bound
/// (the true Hessian Lipschitz constant is zero).
LandscapePtr build_quadratic(const Vector& curvatures, double dissipativity_offset = 1.0,
                             double hessian_lipschitz = 1.0);

/// Same with a full symmetric positive definite matrix.
LandscapePtr build_quadratic(const Matrix& curvature, double dissipativity_offset = 1.0,
                             double hessian_lipschitz = 1.0);

/// Double well with constants certified on the ball of radius 2R:
/// m = s/2, b = 9s/16, R = sqrt(9/8), M = 12.5 s, L = 12 s R.
std::shared_ptr<const DoubleWellLandscape> build_double_well(std::size_t dimension, double barrier_scale);

// ---------------------------------------------------------------------------
// Local minima and certificates

struct LocalMinimum {
  Vector location;
  Matrix hessian;
  double min_eigenvalue = 0.0;
  double gradient_norm_residual = 0.0;
};

struct MinimumSearchOptions {
  double tolerance = 1e-10;
  std::size_t max_descent_iterations = 200000;
  std::size_t max_newton_iterations = 100;
  /// Curvature floor; defaults to the landscape's declared m.
  std::optional<double> curvature_floor;
  /// Skip the start-in-B(R) precondition.
  bool allow_start_outside_ball = false;
};

/// Gradient descent with step 1/M until the gradient is small, then Newton
/// refinement to `tolerance` on the gradient norm. Throws ConvergenceError on
/// budget exhaustion and DegenerateMinimumError if lambda_min(H) < m.
LocalMinimum find_local_minimum(const Landscape& landscape, const Vector& start,
                                const MinimumSearchOptions& options = {});

struct DissipativityReport {
  bool pass = false;
  double min_margin = 0.0;
  Vector worst_point;
  std::size_t probe_count = 0;
  double max_radius = 0.0;
};

/// Evaluates <w, grad F(w)> - m||w||^2 + b on `probe_count` Halton-directed
/// points whose radii expand linearly from 0 to 10 max(1, sqrt(b/m)).
/// PASS iff the smallest margin is >= -1e-9.
DissipativityReport check_dissipativity(const Landscape& landscape, double m, double b, std::size_t probe_count);

struct MorseReport {
  bool pass = false;
  std::size_t grid_points = 0;
  std::size_t near_stationary_points = 0;
  /// Smallest min_j |lambda_j| over near-stationary points (infinity if none).
  double worst_min_abs_eigenvalue = 0.0;
  Vector worst_point;
};

/// Grid-scan certificate of the (eps0, m)-strongly Morse property over the
/// ball of radius `radius` (defaults to the declared R): every grid point with
/// ||grad F|| <= eps0 must have all |lambda_j(hess F)| >= m.
/// Throws PreconditionError for dimension > 3.
MorseReport certify_strongly_morse(const Landscape& landscape, double eps0, double m, std::size_t grid_resolution,
                                   std::optional<double> radius = std::nullopt);

struct DerivativeCheckReport {
  double max_gradient_error = 0.0;  // relative, vs central differences of value
  double max_hessian_error = 0.0;   // relative, vs central differences of gradient
  std::size_t points = 0;
};

/// Central-difference check at `points` seeded uniform points of B(radius).
DerivativeCheckReport check_derivatives(const Landscape& landscape, double radius, std::size_t points,
                                        std::uint64_t seed);

struct LipschitzCheckReport {
  double max_gradient_ratio = 0.0;  // ||dg|| / (M ||dw||)
  double max_hessian_ratio = 0.0;   // ||dH|| / (L ||dw||)
  std::size_t pairs = 0;
};

/// Ratios of observed to declared Lipschitz constants over random pairs in B(radius).
LipschitzCheckReport check_lipschitz(const Landscape& landscape, double radius, std::size_t pairs,
                                     std::uint64_t seed);

struct RemainderCheckReport {
  /// max of ||grad F(w) - H(w - wbar)|| / ((L/2)||w - wbar||^2 + slack).
  double max_ratio = 0.0;
  std::size_t points = 0;
};

/// Linearization remainder around a local minimum at points with ||w - wbar|| <= 1.
/// `slack` absorbs the minimizer's own residual and rounding.
RemainderCheckReport check_linearization_remainder(const Landscape& landscape, const LocalMinimum& minimum,
                                                   std::size_t points, std::uint64_t seed);

/// Uniform point in the Euclidean ball of radius `radius`.
Vector sample_ball(Rng& rng, std::size_t dimension, double radius);

}  // namespace metastab
