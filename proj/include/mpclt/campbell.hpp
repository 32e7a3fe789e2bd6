// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "mpclt/errors.hpp"
#include "mpclt/format.hpp"
#include "mpclt/mp_process.hpp"
#include "mpclt/quadrature.hpp"
#include "mpclt/statistic.hpp"
#include "mpclt/testfn.hpp"

namespace mpclt {

inline constexpr double kDefaultDelta = 1e-3;
inline constexpr double kDefaultCumulantTol = 1e-8;
inline constexpr int kDefaultMaxOrder = 6;
inline constexpr std::size_t kDefaultNodeBudget = 1'000'000;
/// Multiplier applied to the measured small-x envelope constant in tail bounds.
inline constexpr double kTailSafetyFactor = 2.0;

/// int_delta^{beta L} H^m dnu for one order m.
struct MomentIntegral {
  double value = 0.0;
  double error_estimate = 0.0;
  /// Bound on |int_0^delta H^m dnu|, the omitted segment.
  double tail_bound = 0.0;
};

struct CumulantReport {
  WindowParams params;
  int max_order = 0;
  double delta = 0.0;
  double tolerance = 0.0;
  std::vector<double> kappa;       ///< kappa[m-1] = kappa_m
  std::vector<double> quad_error;
  std::vector<double> tail_bound;

  [[nodiscard]] double kappa_at(int m) const { return kappa.at(static_cast<std::size_t>(m - 1)); }
};

/// Measured constant C with |H(x)| <= C log(L/x) / L on a log grid of (delta/10, 1/2).
/// This is bound_profile's small_x ratio restricted to one (L, tau).
template <class Statistic>
[[nodiscard]] double small_x_envelope(Statistic&& statistic, double L, double delta,
                                      std::size_t points = 48) {
  const double lo = std::log(0.1 * delta), hi = std::log(0.5);
  double c = 0.0;
  for (std::size_t i = 0; i < points; ++i) {
    const double x = std::exp(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points));
    c = std::max(c, L * std::fabs(statistic(x)) / std::log(L / x));
  }
  return c;
}

/// Bound on int_0^delta (C log(L/x)/L)^m nu_mp(x) dx using nu_mp(x) <= (nu_mp(delta)/delta) x
/// on (0, delta] and int_0^delta x log^m(L/x) dx = delta^2 m!/2^{m+1} sum_{j<=m} y^j/j!,
/// y = 2 log(L/delta).
[[nodiscard]] inline double small_x_tail_bound(double envelope, double L, double delta, int m) {
  const double slope = nu_mp(delta) / delta;
  const double y = 2.0 * std::log(L / delta);
  double term = 1.0, series = 1.0, factorial = 1.0;
  for (int j = 1; j <= m; ++j) {
    term *= y / j;
    series += term;
    factorial *= j;
  }
  const double x_log_moment = delta * delta * factorial / std::pow(2.0, m + 1) * series;
  return slope * std::pow(envelope / L, m) * x_log_moment;
}

/// Breakpoints for the Campbell integrals on [delta, support_end]: the
/// truncation kinks support_end/k, the regime split at 1/2, and the endpoints.
[[nodiscard]] inline std::vector<double> campbell_breakpoints(double support_end, double delta,
                                                              double upper, int max_kinks = 64) {
  std::vector<double> pts{delta, upper};
  if (0.5 > delta && 0.5 < upper) pts.push_back(0.5);
  for (int k = 1; k <= max_kinks; ++k) {
    const double x = support_end / k;
    if (x > delta && x < upper) pts.push_back(x);
  }
  std::sort(pts.begin(), pts.end());
  std::vector<double> out;
  for (const double p : pts) {
    if (out.empty() || p > out.back() * (1.0 + 1e-12)) out.push_back(p);
  }
  return out;
}

struct MomentOptions {
  double delta = kDefaultDelta;
  double tol = kDefaultCumulantTol;
  std::size_t node_budget = kDefaultNodeBudget;
  /// Upper integration limit; values below support_end are raised to it.
  double upper = 0.0;
};

/// Integrals int_delta^upper H(x)^m nu_mp(x) dx for each m in `orders`, computed
/// in one adaptive pass so H is evaluated once per node. Each component meets
/// max(tol, tol*|value|); the tail bound covers (0, delta).
///
/// `statistic` is any callable x -> H(x) supported in (0, support_end].
template <class Statistic>
[[nodiscard]] std::vector<MomentIntegral> campbell_moment_integrals(Statistic&& statistic, double L,
                                                                    double support_end,
                                                                    std::span<const int> orders,
                                                                    const MomentOptions& opts) {
  if (!(opts.delta > 0.0 && opts.delta <= 1e-2)) throw DomainError("campbell: 0 < delta <= 1e-2 required");
  if (!(opts.tol > 0.0)) throw DomainError("campbell: tol > 0 required");
  for (const int m : orders) {
    if (m < 1) throw DomainError("campbell: moment order m >= 1 required");
  }
  const double upper = std::max(opts.upper, support_end);
  const auto breaks = campbell_breakpoints(support_end, opts.delta, upper);
  const std::vector<double> tols(orders.size(), opts.tol);

  auto integrand = [&](double x, std::span<double> out) {
    const double h = statistic(x);
    const double density = nu_mp(x);
    for (std::size_t j = 0; j < orders.size(); ++j) out[j] = std::pow(h, orders[j]) * density;
  };
  const auto quad = integrate_many(integrand, orders.size(), breaks, tols, opts.tol, opts.node_budget);

  const double envelope = kTailSafetyFactor * small_x_envelope(statistic, L, opts.delta);
  std::vector<MomentIntegral> out;
  for (std::size_t j = 0; j < orders.size(); ++j)
    out.push_back({quad[j].value, quad[j].error,
                   small_x_tail_bound(envelope, L, opts.delta, orders[j])});
  return out;
}

/// Single-order Campbell integral for the window statistic H_{L,tau}.
[[nodiscard]] inline MomentIntegral campbell_moment_integral(const WindowParams& params, int m,
                                                             double delta = kDefaultDelta,
                                                             double tol = kDefaultCumulantTol) {
  params.validate();
  const int order[] = {m};
  MomentOptions opts;
  opts.delta = delta;
  opts.tol = tol;
  auto h = [&params](double x) { return eval_H(params, x); };
  return campbell_moment_integrals(h, params.L, params.support_end(), order, opts).front();
}

/// Cumulants kappa_1..kappa_M of S via Campbell's formula kappa_m = int H^m dnu.
[[nodiscard]] inline CumulantReport cumulants(const WindowParams& params, int max_order = kDefaultMaxOrder,
                                              double tol = kDefaultCumulantTol,
                                              double delta = kDefaultDelta,
                                              std::size_t node_budget = kDefaultNodeBudget) {
  params.validate();
  if (max_order < 2) throw DomainError("cumulants: max order M >= 2 required");
  std::vector<int> orders(static_cast<std::size_t>(max_order));
  for (int m = 1; m <= max_order; ++m) orders[static_cast<std::size_t>(m - 1)] = m;
  MomentOptions opts{delta, tol, node_budget, 0.0};
  auto h = [&params](double x) { return eval_H(params, x); };
  const auto moments = campbell_moment_integrals(h, params.L, params.support_end(), orders, opts);

  CumulantReport report{params, max_order, delta, tol, {}, {}, {}};
  for (const auto& mi : moments) {
    report.kappa.push_back(mi.value);
    report.quad_error.push_back(mi.error_estimate);
    report.tail_bound.push_back(mi.tail_bound);
  }
  return report;
}

/// CSV rows `L,tau,m,kappa,quad_error,tail_bound`.
inline void write_cumulants_csv(std::ostream& out, std::span<const CumulantReport> reports) {
  out << "L,tau,m,kappa,quad_error,tail_bound\n";
  for (const auto& r : reports) {
    for (int m = 1; m <= r.max_order; ++m) {
      const auto i = static_cast<std::size_t>(m - 1);
      out << format_double(r.params.L) << ',' << format_double(r.params.tau) << ',' << m << ','
          << format_double(r.kappa[i]) << ',' << format_double(r.quad_error[i]) << ','
          << format_double(r.tail_bound[i]) << '\n';
    }
  }
}

struct VarianceRow {
  double L;
  double kappa2;
  double deviation;  ///< |kappa2 - Sigma^2_GOE|
  double error;      ///< quadrature error + tail bound for kappa2
};

struct VarianceConvergence {
  double goe_target = 0.0;
  std::vector<VarianceRow> rows;
};

[[nodiscard]] inline VarianceConvergence variance_convergence(const TestFunctionSpec& spec, double tau,
                                                              std::span<const double> L_ladder,
                                                              double tol = kDefaultCumulantTol,
                                                              double delta = kDefaultDelta) {
  if (!(tau > 0.0)) throw ConfigError("tau > 0 required for variance convergence");
  VarianceConvergence out;
  out.goe_target = goe_variance(spec);
  for (const double L : L_ladder) {
    const WindowParams p{L, tau, spec};
    const auto mi = campbell_moment_integral(p, 2, delta, tol);
    out.rows.push_back({L, mi.value, std::fabs(mi.value - out.goe_target), mi.error_estimate + mi.tail_bound});
  }
  return out;
}

/// Two-point Richardson step assuming v(L) = v_inf + c L^{-order}.
[[nodiscard]] inline double richardson_extrapolate(double L_coarse, double v_coarse, double L_fine,
                                                   double v_fine, double order = 2.0) {
  const double ratio = std::pow(L_fine / L_coarse, order);
  return v_fine + (v_fine - v_coarse) / (ratio - 1.0);
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  ///< RMS residual
};

[[nodiscard]] inline LineFit least_squares(std::span<const double> xs, std::span<const double> ys) {
  const auto n = static_cast<double>(xs.size());
  if (xs.size() != ys.size() || xs.size() < 2) throw DomainError("least_squares: need >= 2 paired points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx == 0.0) throw DomainError("least_squares: abscissae are all equal");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / n);
  return fit;
}

struct DecayFit {
  int m = 0;
  LineFit plain;          ///< log|kappa_m| vs log L
  LineFit log_corrected;  ///< log(|kappa_m| / (log L)^m) vs log L
  std::vector<double> used_L;
  std::vector<std::string> warnings;
};

/// Fits the decay of |kappa_m| in L. Points whose |kappa_m| does not exceed
/// their error floor are dropped with a warning.
[[nodiscard]] inline DecayFit fit_decay(int m, std::span<const double> L_values,
                                        std::span<const double> kappa, std::span<const double> error_floor) {
  DecayFit fit;
  fit.m = m;
  std::vector<double> xs, ys, ys_corr;
  for (std::size_t i = 0; i < L_values.size(); ++i) {
    const double k = std::fabs(kappa[i]);
    if (!(k > error_floor[i])) {
      fit.warnings.push_back("kappa_" + std::to_string(m) + " at L=" + format_double(L_values[i]) +
                             " is below its error floor; dropped from the fit");
      continue;
    }
    const double logL = std::log(L_values[i]);
    xs.push_back(logL);
    ys.push_back(std::log(k));
    ys_corr.push_back(std::log(k) - m * std::log(logL));
    fit.used_L.push_back(L_values[i]);
  }
  if (xs.size() < 2) throw DomainError("decay_fit: fewer than two usable ladder points");
  fit.plain = least_squares(xs, ys);
  fit.log_corrected = least_squares(xs, ys_corr);
  return fit;
}

[[nodiscard]] inline DecayFit fit_decay(int m, std::span<const CumulantReport> reports) {
  std::vector<double> L, kappa, floor;
  for (const auto& r : reports) {
    const auto i = static_cast<std::size_t>(m - 1);
    L.push_back(r.params.L);
    kappa.push_back(r.kappa.at(i));
    floor.push_back(r.quad_error.at(i) + r.tail_bound.at(i));
  }
  return fit_decay(m, L, kappa, floor);
}

/// Decay fit of kappa_m over an L ladder (m >= 3, at least four rungs).
[[nodiscard]] inline DecayFit decay_fit(const TestFunctionSpec& spec, double tau,
                                        std::span<const double> L_ladder, int m,
                                        double tol = kDefaultCumulantTol, double delta = kDefaultDelta) {
  if (m < 3) throw ConfigError("decay fit requires m >= 3");
  if (L_ladder.size() < 4) throw ConfigError("decay fit requires a ladder of at least 4 L values");
  std::vector<CumulantReport> reports;
  for (const double L : L_ladder) reports.push_back(cumulants(WindowParams{L, tau, spec}, m, tol, delta));
  return fit_decay(m, reports);
}

}  // namespace mpclt
