// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <numbers>

namespace mpclt {

/// Below this argument the hyperbolic helpers switch to their Taylor series.
inline constexpr double kSmallArgument = 1e-4;

/// cosh(x) - 1 without cancellation near 0; equals 2 sinh^2(x/2).
[[nodiscard]] inline double cosh_minus_one(double x) noexcept {
  const double ax = std::fabs(x);
  if (ax < kSmallArgument) {
    const double x2 = x * x;
    return x2 * (0.5 + x2 * (1.0 / 24.0 + x2 / 720.0));
  }
  if (ax < 1.0) {
    const double s = std::sinh(0.5 * x);
    return 2.0 * s * s;
  }
  return std::cosh(x) - 1.0;
}

/// sinh with a series branch below kSmallArgument. std::sinh is already
/// accurate there on glibc; the branch pins the behaviour across libms.
[[nodiscard]] inline double sinh_stable(double x) noexcept {
  if (std::fabs(x) < kSmallArgument) {
    const double x2 = x * x;
    return x * (1.0 + x2 * (1.0 / 6.0 + x2 / 120.0));
  }
  return std::sinh(x);
}

[[nodiscard]] inline double normal_cdf(double z) noexcept {
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

}  // namespace mpclt
