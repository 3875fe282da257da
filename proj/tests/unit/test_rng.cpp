#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "metastab/rng.hpp"
#include "metastab/stats.hpp"

using namespace metastab;

TEST_CASE("splitmix64 matches the reference generator") {
  // First output of the reference SplitMix64 generator seeded with 0.
  CHECK(splitmix64(0) == 0xE220A8397B1DCDAFULL);
  static_assert(derive_seed(7, 3) == splitmix64(splitmix64(7) ^ (4 * 0x9E3779B97F4A7C15ULL)));
}

TEST_CASE("derived seeds are distinct across streams and parents") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 8; ++s) {
    for (std::uint64_t i = 0; i < 256; ++i) seen.insert(derive_seed(s, i));
  }
  CHECK(seen.size() == 8 * 256);
}

TEST_CASE("noise stream is a pure function of (seed, index, coordinate)") {
  const NoiseStream a(42), b(42), c(43);
  std::vector<double> fa(5), fb(5);
  a.fill(17, fa);
  b.fill(17, fb);
  CHECK(fa == fb);
  for (std::uint64_t j = 0; j < 5; ++j) CHECK(a.gaussian(17, j) == fa[j]);
  CHECK(a.gaussian(17, 0) != c.gaussian(17, 0));
  // Evaluation order does not matter.
  const double late = a.gaussian(1000, 3);
  CHECK(a.gaussian(1000, 3) == late);
}

TEST_CASE("noise stream moments") {
  const NoiseStream s(2024);
  const std::size_t n = 200000;
  double sum = 0.0, sq = 0.0, cross = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto [x, y] = s.gaussian_pair(i, 0);
    sum += x;
    sq += x * x;
    cross += x * y;
  }
  const double N = static_cast<double>(n);
  CHECK(std::abs(sum / N) < 5.0 / std::sqrt(N));
  CHECK(std::abs(sq / N - 1.0) < 5.0 * std::sqrt(2.0 / N));
  CHECK(std::abs(cross / N) < 5.0 / std::sqrt(N));
}

TEST_CASE("rng uniform and normal") {
  Rng r(9);
  double lo = 1.0, hi = 0.0, sum = 0.0, sq = 0.0;
  const std::size_t n = 100000;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = r.uniform();
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    const double z = r.normal();
    sum += z;
    sq += z * z;
  }
  CHECK(lo >= 0.0);
  CHECK(hi < 1.0);
  CHECK(std::abs(sum / n) < 0.02);
  CHECK(std::abs(sq / n - 1.0) < 0.03);
  Rng x(5), y(5);
  for (int i = 0; i < 10; ++i) CHECK(x.normal() == y.normal());
  CHECK(Rng(5).uniform(2.0, 3.0) >= 2.0);
}
