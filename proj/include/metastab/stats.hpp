#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace metastab {

inline constexpr double kZ95 = 1.959963984540054;

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
};

/// Wilson score interval for a binomial proportion.
Interval wilson_interval(std::size_t successes, std::size_t trials, double z = kZ95);

struct MeanEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  std::size_t count = 0;
};

/// Sample mean and its standard error (sample variance with n-1).
MeanEstimate mean_with_error(std::span<const double> xs);

/// Empirical quantile with linear interpolation between order statistics
/// (Hyndman-Fan type 7). Copies and sorts its input.
double quantile(std::span<const double> xs, double p);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Ordinary least squares y ~ slope * x + intercept. Needs at least two distinct x.
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

/// Variance of a standard normal truncated to [-a, a].
double truncated_normal_variance(double a);

}  // namespace metastab
