#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "metastab/landscape.hpp"
#include "metastab/theory.hpp"

namespace metastab {

inline constexpr int kConfigSchemaVersion = 1;

/// Family name plus its parameter block. Only the keys of the selected
/// family are accepted when parsing.
struct LandscapeSpec {
  std::string family = "quadratic";  // quadratic | double_well | gaussian_location | perturbed_quadratic
  Vector curvatures = Vector::Ones(2);  // quadratic, perturbed_quadratic
  double dissipativity_offset = 1.0;    // quadratic
  double hessian_lipschitz = 1.0;       // quadratic, gaussian_location, perturbed_quadratic
  std::size_t dimension = 1;            // double_well
  double barrier_scale = 1.0;           // double_well
  Vector mean = Vector::Zero(1);        // gaussian_location
  double truncation = 3.0;              // gaussian_location
  double ridge = 0.0;                   // gaussian_location
  double curvature_spread = 0.25;       // perturbed_quadratic
  double tilt_spread = 0.5;             // perturbed_quadratic
  std::size_t n = 1000;                 // ERM families: dataset size
  std::optional<std::uint64_t> data_seed;  // ERM families; derived from run.seed otherwise
  std::optional<Vector> minimum_start;

  bool is_erm() const { return family == "gaussian_location" || family == "perturbed_quadratic"; }
  bool operator==(const LandscapeSpec& other) const;
};

struct RunSpec {
  std::uint64_t seed = 0;
  std::size_t replicas = 500;
  std::string kind = "discrete";  // discrete | diffusion_proxy | exact_ou
  std::uint32_t substep_factor = 16;
  std::uint32_t noise_substeps = 1;
  std::optional<double> eta;
  std::optional<double> beta;
  bool noiseless = false;
  bool override_admissibility = false;
  std::optional<Vector> initial_point;
  std::size_t write_trajectories = 0;
  std::vector<double> betas;
  std::size_t budget_K = 1000000;
  std::size_t workers = 0;

  bool operator==(const RunSpec& other) const;
};

struct OutputSpec {
  std::string directory = "out";
  std::vector<std::string> formats{"json"};
  std::string trajectory_format = "csv";  // csv | binary

  bool operator==(const OutputSpec& other) const = default;
};

/// `params.constants` and `params.d` are not part of the file; they are
/// filled from the built landscape.
struct ExperimentConfig {
  int schema_version = kConfigSchemaVersion;
  LandscapeSpec landscape;
  ProblemParams params;
  RunSpec run;
  OutputSpec output;

  bool operator==(const ExperimentConfig& other) const;
};

/// Throws ConfigError naming the offending key path ("$.run.replicas") for
/// unknown keys, wrong types and invalid values, and "line L, column C" for
/// malformed JSON.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Canonical JSON (fixed key order, two-space indent, trailing newline).
std::string serialize_config(const ExperimentConfig& config);

/// FNV-1a 64-bit hash.
std::uint64_t fnv1a64(const std::string& bytes);
std::string hex64(std::uint64_t value);

struct BuiltLandscape {
  LandscapePtr landscape;
  std::shared_ptr<const ErmFamily> family;
  std::optional<Dataset> dataset;
  /// params with constants and d filled in.
  ProblemParams params;
};

BuiltLandscape build_landscape(const ExperimentConfig& config);

/// Default start for the minimum search: e_1 for the double well, the origin
/// otherwise.
Vector default_minimum_start(const ExperimentConfig& config, std::size_t dimension);

struct ManifestOutput {
  std::string path;
  std::uint64_t checksum = 0;
  std::size_t bytes = 0;
};

struct RunManifest {
  std::string command;
  std::uint64_t config_hash = 0;
  std::string tool_version;
  std::uint64_t seed = 0;
  std::vector<ManifestOutput> outputs;
  std::vector<std::pair<std::string, double>> timings;
  bool complete = true;
  std::string error;

  std::string to_json() const;
};

}  // namespace metastab
