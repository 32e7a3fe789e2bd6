// SPDX-License-Identifier: Apache-2.0
//
// Reference computations used only by the tests. Nothing here calls into the
// production evaluation paths for H, nu or the quadrature.
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>

#include "mpclt/statistic.hpp"

namespace mpclt::oracle {

/// Composite Simpson rule with a fixed step (rounded so it divides [a, b]),
/// accumulated in long double.
template <class F>
long double simpson(F&& f, long double a, long double b, long double step) {
  auto n = static_cast<std::int64_t>(std::ceil((b - a) / step));
  if (n % 2) ++n;
  const long double h = (b - a) / static_cast<long double>(n);
  long double acc = static_cast<long double>(f(a)) + static_cast<long double>(f(b));
  for (std::int64_t i = 1; i < n; ++i)
    acc += (i % 2 ? 4.0L : 2.0L) * static_cast<long double>(f(a + h * static_cast<long double>(i)));
  return acc * h / 3.0L;
}

/// nu_mp in long double straight from (cosh x - 1)/x; accurate for x >~ 1e-3.
inline long double nu_direct(long double x) { return (std::cosh(x) - 1.0L) / x; }

inline long double fhat_ld(const TestFunctionSpec& s, long double x) {
  const long double u = std::fabs(x) / static_cast<long double>(s.beta);
  if (u >= 1.0L) return 0.0L;
  return s.family == FhatFamily::triangular ? 1.0L - u : std::exp(-1.0L / (1.0L - u * u));
}

/// F(x) in long double.
inline long double F_ld(const WindowParams& p, long double x) {
  return fhat_ld(p.fhat, x / p.L) * std::cos(x * p.tau) / std::sinh(x / 2.0L);
}

/// H(x) by plain long double summation of every term up to k <= beta L / x.
inline long double H_ld(const WindowParams& p, long double x) {
  const long double bound = static_cast<long double>(p.fhat.beta) * p.L / x;
  long double acc = 0.0L;
  for (std::int64_t k = 1; static_cast<long double>(k) <= bound; ++k) acc += F_ld(p, k * x);
  return 2.0L * x / p.L * acc;
}

}  // namespace mpclt::oracle
