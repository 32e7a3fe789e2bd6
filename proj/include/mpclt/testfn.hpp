// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <string>
#include <string_view>

#include "mpclt/errors.hpp"
#include "mpclt/quadrature.hpp"

namespace mpclt {

/// Shape of the Fourier transform of the even test function f.
enum class FhatFamily {
  triangular,   ///< (1 - |x|/beta)_+ ; continuous, closed-form GOE variance
  smooth_bump,  ///< exp(-1/(1 - (x/beta)^2)) on |x| < beta ; C_c^infinity
};

[[nodiscard]] inline std::string_view to_string(FhatFamily family) noexcept {
  switch (family) {
    case FhatFamily::triangular:
      return "triangular";
    case FhatFamily::smooth_bump:
      return "smooth_bump";
  }
  return "unknown";
}

[[nodiscard]] inline FhatFamily parse_family(std::string_view name) {
  if (name == "triangular") return FhatFamily::triangular;
  if (name == "smooth_bump") return FhatFamily::smooth_bump;
  throw ConfigError("unknown fhat family '" + std::string(name) +
                    "' (expected triangular or smooth_bump)");
}

/// Test function given through its compactly supported Fourier transform.
/// `beta` is the half-width of supp f-hat.
struct TestFunctionSpec {
  FhatFamily family = FhatFamily::triangular;
  double beta = 1.0;

  void validate() const {
    if (!(beta > 0.0) || !std::isfinite(beta))
      throw ConfigError("beta > 0 required for the test function support");
  }

  friend bool operator==(const TestFunctionSpec&, const TestFunctionSpec&) = default;
};

/// f-hat(x). Even, bounded by 1, and exactly zero for |x| >= beta.
[[nodiscard]] inline double eval_fhat(const TestFunctionSpec& spec, double x) {
  if (!std::isfinite(x)) throw DomainError("eval_fhat: non-finite argument");
  const double u = std::fabs(x) / spec.beta;
  if (u >= 1.0) return 0.0;
  switch (spec.family) {
    case FhatFamily::triangular:
      return 1.0 - u;
    case FhatFamily::smooth_bump:
      return std::exp(-1.0 / (1.0 - u * u));
  }
  return 0.0;
}

/// 4 * int_0^beta x f-hat(x)^2 dx by adaptive quadrature at relative tolerance 1e-10.
[[nodiscard]] inline double goe_variance_quadrature(const TestFunctionSpec& spec) {
  spec.validate();
  const auto integrand = [&spec](double x) {
    const double v = eval_fhat(spec, x);
    return x * v * v;
  };
  QuadratureOptions opts;
  opts.rel_tol = 1e-10;
  opts.abs_tol = 1e-300;  // effectively relative-only; keeps tiny beta convergent
  return 4.0 * integrate(integrand, 0.0, spec.beta, opts).value;
}

/// GOE number variance 2 int |x| f-hat(x)^2 dx.
[[nodiscard]] inline double goe_variance(const TestFunctionSpec& spec) {
  spec.validate();
  switch (spec.family) {
    case FhatFamily::triangular:
      // 4 beta^2 int_0^1 u (1-u)^2 du = beta^2 / 3
      return spec.beta * spec.beta / 3.0;
    case FhatFamily::smooth_bump:
      return goe_variance_quadrature(spec);
  }
  return 0.0;
}

}  // namespace mpclt
