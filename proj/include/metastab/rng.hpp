#pragma once

#include <cstdint>
#include <span>
#include <utility>

namespace metastab {

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed of child stream `stream` under `seed`:
///   splitmix64(splitmix64(seed) ^ ((stream + 1) * 0x9E3779B97F4A7C15)).
/// Replica i of a batch seeded with s runs with derive_seed(s, i); nested
/// batches (e.g. per inverse temperature, then per replica) apply it twice.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  return splitmix64(splitmix64(seed) ^ ((stream + 1) * 0x9E3779B97F4A7C15ULL));
}

/// Counter-based standard Gaussian source.
///
/// The variate for (index, coordinate) is a pure function of
/// (seed, index, coordinate): coordinates 2p and 2p+1 of step `index` are the
/// Box-Muller pair built from two 53-bit uniforms hashed out of
/// (seed, index, p). Any two simulators sharing a seed therefore see the same
/// noise at the same step index, whatever order they evaluate it in.
class NoiseStream {
 public:
  explicit NoiseStream(std::uint64_t seed) noexcept : key_(splitmix64(seed ^ 0xA0761D6478BD642FULL)) {}

  std::pair<double, double> gaussian_pair(std::uint64_t index, std::uint64_t pair) const noexcept;

  double gaussian(std::uint64_t index, std::uint64_t coordinate) const noexcept;

  /// Writes the variates of step `index` for coordinates 0..out.size()-1.
  void fill(std::uint64_t index, std::span<double> out) const noexcept;

 private:
  std::uint64_t key_;
};

/// Sequential generator for dataset draws and Monte Carlo oracles; a thin
/// cursor over a NoiseStream plus a SplitMix64 uniform counter.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept : noise_(seed), state_(splitmix64(seed ^ 0x5851F42D4C957F2DULL)) {}

  std::uint64_t next_u64() noexcept {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform on [0, 1).
  double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  double normal() noexcept;

 private:
  NoiseStream noise_;
  std::uint64_t state_;
  std::uint64_t pair_counter_ = 0;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace metastab
