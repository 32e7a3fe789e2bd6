// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mpclt/compensated.hpp"
#include "mpclt/errors.hpp"
#include "mpclt/format.hpp"
#include "mpclt/mp_process.hpp"
#include "mpclt/special.hpp"
#include "mpclt/testfn.hpp"

namespace mpclt {

/// Default cap on the number of k-terms in one evaluation of H.
inline constexpr std::uint64_t kDefaultTermBudget = 100'000'000;

/// Parameters of the smoothed window: inverse width L, center tau, test function.
struct WindowParams {
  double L = 8.0;
  double tau = 1.0;
  TestFunctionSpec fhat{};

  /// H vanishes identically beyond this length.
  [[nodiscard]] double support_end() const noexcept { return fhat.beta * L; }

  void validate() const {
    fhat.validate();
    if (!(L > 2.0) || !std::isfinite(L)) throw ConfigError("L > 2 required");
    if (!(tau >= 0.0) || !std::isfinite(tau)) throw ConfigError("tau >= 0 required");
  }

  friend bool operator==(const WindowParams&, const WindowParams&) = default;
};

/// F(x) = f-hat(x/L) cos(x tau) / sinh(x/2).
[[nodiscard]] inline double eval_F(const WindowParams& params, double x) {
  if (!(x > 0.0)) throw DomainError("eval_F: x > 0 required");
  const double fh = eval_fhat(params.fhat, x / params.L);
  if (fh == 0.0) return 0.0;
  return fh * std::cos(x * params.tau) / sinh_stable(0.5 * x);
}

/// Number of nonzero-candidate terms in the k-sum for H at x.
[[nodiscard]] inline std::uint64_t truncation_index(const WindowParams& params, double x) noexcept {
  const double k = std::floor(params.support_end() / x);
  return k < 1.0 ? 0 : static_cast<std::uint64_t>(k);
}

/// H(x) = (2x/L) sum_{k <= beta L / x} F(kx), compensated accumulation.
/// Throws BudgetExceeded when the truncation index exceeds term_budget.
[[nodiscard]] inline double eval_H(const WindowParams& params, double x,
                                   std::uint64_t term_budget = kDefaultTermBudget) {
  if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("eval_H: x > 0 required");
  std::uint64_t terms = truncation_index(params, x);
  if (terms == 0) return 0.0;
  if (terms > term_budget)
    throw BudgetExceeded("eval_H: " + std::to_string(terms) + " terms at x = " + format_double(x) +
                         " exceed the term budget " + std::to_string(term_budget));
  // 1/sinh(kx/2) is exactly 0 in double precision beyond kx/2 ~ 710.
  terms = std::min<std::uint64_t>(terms, static_cast<std::uint64_t>(1421.0 / x) + 1);

  const double inv_L = 1.0 / params.L;
  CompensatedSum acc;
  for (std::uint64_t k = 1; k <= terms; ++k) {
    const double y = static_cast<double>(k) * x;
    const double fh = eval_fhat(params.fhat, y * inv_L);
    if (fh == 0.0) continue;
    acc += fh * std::cos(y * params.tau) / sinh_stable(0.5 * y);
  }
  return 2.0 * x * inv_L * acc.value();
}

/// Linear statistic S = sum over the realization's points of H.
/// The realization must cover the whole support of H.
[[nodiscard]] inline double eval_S(const WindowParams& params, const Realization& realization) {
  if (realization.window_max < params.support_end())
    throw DomainError("eval_S: realization window " + format_double(realization.window_max) +
                      " is shorter than the support of H (" + format_double(params.support_end()) + ")");
  CompensatedSum acc;
  for (const double x : realization.points) acc += eval_H(params, x);
  return acc.value();
}

/// Which side of x = 1/2 a bound ratio refers to.
enum class BoundRegime { small_x, large_x };

[[nodiscard]] inline std::string_view to_string(BoundRegime r) noexcept {
  return r == BoundRegime::small_x ? "small_x" : "large_x";
}

struct BoundRow {
  double L;
  double tau;
  BoundRegime regime;
  /// small_x: max L|H|/log(L/x) over 0 < x < 1/2; large_x: max L|H|/(x e^{-x/2}) over x >= 1/2.
  double max_ratio;
};

struct BoundProfile {
  std::vector<BoundRow> rows;
  std::vector<double> L_values;
  std::vector<double> r_small;  ///< per L, maximized over tau
  std::vector<double> r_large;
};

/// Default probe grid: `small_points` log-spaced points in [x_min, 1/2) and
/// `large_points` evenly spaced points in [1/2, x_end].
[[nodiscard]] inline std::vector<double> default_bound_grid(double x_end, double x_min = 1e-4,
                                                            std::size_t small_points = 400,
                                                            std::size_t large_points = 600) {
  std::vector<double> grid;
  const double log_lo = std::log(x_min), log_hi = std::log(0.5);
  for (std::size_t i = 0; i < small_points; ++i)
    grid.push_back(std::exp(log_lo + (log_hi - log_lo) * static_cast<double>(i) / static_cast<double>(small_points)));
  for (std::size_t i = 0; i < large_points; ++i)
    grid.push_back(0.5 + (x_end - 0.5) * static_cast<double>(i) / static_cast<double>(large_points - 1));
  return grid;
}

/// Normalized |H| ratios against the two-regime envelope, per (L, tau).
[[nodiscard]] inline BoundProfile bound_profile(std::span<const WindowParams> ladder,
                                                std::span<const double> x_grid,
                                                std::span<const double> tau_grid) {
  BoundProfile profile;
  for (const auto& base : ladder) {
    base.validate();
    double best_small = 0.0, best_large = 0.0;
    for (const double tau : tau_grid) {
      WindowParams p = base;
      p.tau = tau;
      double small = 0.0, large = 0.0;
      for (const double x : x_grid) {
        if (!(x > 0.0)) continue;
        const double h = std::fabs(eval_H(p, x));
        if (x < 0.5) {
          small = std::max(small, p.L * h / std::log(p.L / x));
        } else {
          large = std::max(large, p.L * h / (x * std::exp(-0.5 * x)));
        }
      }
      profile.rows.push_back({p.L, tau, BoundRegime::small_x, small});
      profile.rows.push_back({p.L, tau, BoundRegime::large_x, large});
      best_small = std::max(best_small, small);
      best_large = std::max(best_large, large);
    }
    profile.L_values.push_back(base.L);
    profile.r_small.push_back(best_small);
    profile.r_large.push_back(best_large);
  }
  return profile;
}

/// CSV rows `L,tau,regime,max_ratio`.
inline void write_bound_csv(std::ostream& out, const BoundProfile& profile) {
  out << "L,tau,regime,max_ratio\n";
  for (const auto& r : profile.rows)
    out << format_double(r.L) << ',' << format_double(r.tau) << ',' << to_string(r.regime) << ','
        << format_double(r.max_ratio) << '\n';
}

}  // namespace mpclt
