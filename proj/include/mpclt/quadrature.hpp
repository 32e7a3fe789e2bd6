// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "mpclt/compensated.hpp"
#include "mpclt/errors.hpp"

namespace mpclt {

struct QuadratureOptions {
  /// Absolute tolerance on the total error estimate.
  double abs_tol = 1e-10;
  /// Relative tolerance; a component converges once its error is below
  /// max(abs_tol, rel_tol * |value|).
  double rel_tol = 0.0;
  /// Hard cap on integrand evaluations; exceeding it throws BudgetExceeded.
  std::size_t max_evaluations = 1'000'000;
};

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  std::size_t evaluations = 0;
};

namespace detail {

// 21-point Gauss-Kronrod rule with embedded 10-point Gauss rule (QUADPACK qk21).
inline constexpr std::array<double, 11> kKronrodNodes = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.000000000000000000000000000000000};
inline constexpr std::array<double, 11> kKronrodWeights = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077208980221925, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};
// Gauss weights for the odd-indexed Kronrod nodes 1, 3, 5, 7, 9.
inline constexpr std::array<double, 5> kGaussWeights = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

inline constexpr std::size_t kRulePoints = 21;

struct Panel {
  double a;
  double b;
  std::vector<double> value;
  std::vector<double> error;
  double badness;
};

/// Applies the G10/K21 pair on [a, b] to a vector-valued integrand.
/// The error estimate is the raw |K21 - G10| difference, which overstates the
/// true K21 error on smooth panels.
template <class Integrand>
Panel apply_rule(Integrand& f, double a, double b, std::size_t dim, std::vector<double>& scratch) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  Panel p{a, b, std::vector<double>(dim, 0.0), std::vector<double>(dim, 0.0), 0.0};
  std::vector<double> gauss(dim, 0.0);
  scratch.assign(dim, 0.0);

  auto accumulate = [&](double x, double wk, double wg) {
    f(x, std::span<double>(scratch));
    for (std::size_t c = 0; c < dim; ++c) {
      p.value[c] += wk * scratch[c];
      gauss[c] += wg * scratch[c];
    }
  };

  accumulate(center, kKronrodWeights[10], 0.0);
  for (std::size_t j = 0; j < 10; ++j) {
    const double dx = half * kKronrodNodes[j];
    const double wg = (j % 2 == 1) ? kGaussWeights[j / 2] : 0.0;
    accumulate(center - dx, kKronrodWeights[j], wg);
    accumulate(center + dx, kKronrodWeights[j], wg);
  }
  for (std::size_t c = 0; c < dim; ++c) {
    p.value[c] *= half;
    gauss[c] *= half;
    p.error[c] = std::fabs(p.value[c] - gauss[c]);
  }
  return p;
}

struct PanelOrder {
  bool operator()(const Panel& lhs, const Panel& rhs) const { return lhs.badness < rhs.badness; }
};

}  // namespace detail

/// Globally adaptive Gauss-Kronrod integration of a vector-valued integrand.
///
/// `f(x, out)` writes `dim` component values at x. `breakpoints` is a sorted
/// list containing at least the two endpoints; known kinks belong in it. The
/// panel with the worst error-to-tolerance ratio over all components is
/// bisected until every component meets its tolerance. `abs_tols` holds one
/// absolute tolerance per component.
template <class Integrand>
std::vector<QuadratureResult> integrate_many(Integrand&& f, std::size_t dim,
                                             std::span<const double> breakpoints,
                                             std::span<const double> abs_tols, double rel_tol,
                                             std::size_t max_evaluations) {
  if (breakpoints.size() < 2) throw DomainError("integrate: need at least two breakpoints");
  if (abs_tols.size() != dim) throw DomainError("integrate: one tolerance per component required");
  for (std::size_t i = 1; i < breakpoints.size(); ++i) {
    if (!(breakpoints[i] > breakpoints[i - 1]))
      throw DomainError("integrate: breakpoints must be strictly increasing");
  }

  std::vector<double> scratch;
  std::size_t evaluations = 0;
  std::priority_queue<detail::Panel, std::vector<detail::Panel>, detail::PanelOrder> active;
  std::vector<detail::Panel> frozen;  // panels too narrow to bisect further
  std::vector<double> total_value(dim, 0.0);
  std::vector<double> total_error(dim, 0.0);

  auto target = [&](std::size_t c) {
    return std::max(abs_tols[c], rel_tol * std::fabs(total_value[c]));
  };
  auto badness = [&](const detail::Panel& p) {
    double worst = 0.0;
    for (std::size_t c = 0; c < dim; ++c) worst = std::max(worst, p.error[c] / target(c));
    return worst;
  };
  auto converged = [&] {
    for (std::size_t c = 0; c < dim; ++c) {
      if (total_error[c] > target(c)) return false;
    }
    return true;
  };
  auto add = [&](const detail::Panel& p, double sign) {
    for (std::size_t c = 0; c < dim; ++c) {
      total_value[c] += sign * p.value[c];
      total_error[c] += sign * p.error[c];
    }
  };

  std::vector<detail::Panel> initial;
  for (std::size_t i = 1; i < breakpoints.size(); ++i) {
    initial.push_back(detail::apply_rule(f, breakpoints[i - 1], breakpoints[i], dim, scratch));
    evaluations += detail::kRulePoints;
    add(initial.back(), 1.0);
  }
  for (auto& p : initial) {
    p.badness = badness(p);
    active.push(std::move(p));
  }

  while (!converged()) {
    if (active.empty()) {
      throw BudgetExceeded("integrate: tolerance unattainable at floating-point resolution");
    }
    if (evaluations + 2 * detail::kRulePoints > max_evaluations) {
      throw BudgetExceeded("integrate: evaluation budget of " + std::to_string(max_evaluations) +
                           " exhausted before reaching tolerance");
    }
    detail::Panel worst = active.top();
    active.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    const double width_floor = 64.0 * std::numeric_limits<double>::epsilon() *
                               std::max(std::fabs(worst.a), std::fabs(worst.b));
    if (!(mid > worst.a && mid < worst.b) || (worst.b - worst.a) < width_floor) {
      frozen.push_back(std::move(worst));
      continue;
    }
    add(worst, -1.0);
    auto left = detail::apply_rule(f, worst.a, mid, dim, scratch);
    auto right = detail::apply_rule(f, mid, worst.b, dim, scratch);
    evaluations += 2 * detail::kRulePoints;
    add(left, 1.0);
    add(right, 1.0);
    left.badness = badness(left);
    right.badness = badness(right);
    active.push(std::move(left));
    active.push(std::move(right));
  }

  // Re-sum from the panels so the running +/- updates leave no drift.
  std::vector<CompensatedSum> value(dim);
  std::vector<double> error(dim, 0.0);
  auto collect = [&](const detail::Panel& p) {
    for (std::size_t c = 0; c < dim; ++c) {
      value[c] += p.value[c];
      error[c] += p.error[c];
    }
  };
  for (const auto& p : frozen) collect(p);
  while (!active.empty()) {
    collect(active.top());
    active.pop();
  }

  std::vector<QuadratureResult> out(dim);
  for (std::size_t c = 0; c < dim; ++c) out[c] = {value[c].value(), error[c], evaluations};
  return out;
}

/// Scalar convenience wrapper around integrate_many.
template <class Integrand>
QuadratureResult integrate(Integrand&& f, std::span<const double> breakpoints,
                           const QuadratureOptions& options = {}) {
  auto vector_f = [&f](double x, std::span<double> out) { out[0] = f(x); };
  const std::array<double, 1> tol{options.abs_tol};
  return integrate_many(vector_f, 1, breakpoints, tol, options.rel_tol,
                        options.max_evaluations)[0];
}

template <class Integrand>
QuadratureResult integrate(Integrand&& f, double a, double b, const QuadratureOptions& options = {}) {
  const std::array<double, 2> ends{a, b};
  return integrate(std::forward<Integrand>(f), std::span<const double>(ends), options);
}

}  // namespace mpclt
