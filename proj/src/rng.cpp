#include "metastab/rng.hpp"

#include <cmath>
#include <numbers>

namespace metastab {

std::pair<double, double> NoiseStream::gaussian_pair(std::uint64_t index, std::uint64_t pair) const noexcept {
  std::uint64_t h = splitmix64(key_ ^ splitmix64(index));
  h = splitmix64(h ^ (pair * 0xD1B54A32D192ED03ULL));
  const std::uint64_t h2 = splitmix64(h);
  // u1 in (0, 1] keeps the logarithm finite.
  const double u1 = (static_cast<double>(h >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = static_cast<double>(h2 >> 11) * 0x1.0p-53;
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

double NoiseStream::gaussian(std::uint64_t index, std::uint64_t coordinate) const noexcept {
  const auto [a, b] = gaussian_pair(index, coordinate / 2);
  return (coordinate % 2 == 0) ? a : b;
}

void NoiseStream::fill(std::uint64_t index, std::span<double> out) const noexcept {
  const std::size_t n = out.size();
  std::size_t j = 0;
  for (std::uint64_t p = 0; j < n; ++p) {
    const auto [a, b] = gaussian_pair(index, p);
    out[j++] = a;
    if (j < n) out[j++] = b;
  }
}

double Rng::normal() noexcept {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  const auto [a, b] = noise_.gaussian_pair(pair_counter_++, 0);
  cached_ = b;
  has_cached_ = true;
  return a;
}

}  // namespace metastab
