// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mpclt/compensated.hpp"
#include "mpclt/errors.hpp"
#include "mpclt/format.hpp"
#include "mpclt/quadrature.hpp"
#include "mpclt/special.hpp"

namespace mpclt {

/// Density of the Mirzakhani-Petri intensity, 2 sinh^2(x/2) / x.
[[nodiscard]] inline double nu_mp(double x) {
  if (!(x > 0.0)) throw DomainError("nu_mp: x > 0 required");
  return cosh_minus_one(x) / x;
}

/// Below this length the cumulative intensity comes from its Taylor series.
inline constexpr double kIntensitySeriesCrossover = 1e-4;

/// Lambda(x) = x^2/4 + x^4/96 + x^6/4320 + x^8/322560 + ...
[[nodiscard]] inline double cumulative_intensity_series(double x) noexcept {
  const double x2 = x * x;
  return x2 * (0.25 + x2 * (1.0 / 96.0 + x2 * (1.0 / 4320.0 + x2 / 322560.0)));
}

/// Exact mass of nu_mp over [a, b] by adaptive quadrature (independent of any table).
[[nodiscard]] inline double intensity_mass(double a, double b, double rel_tol = 1e-14) {
  if (!(a >= 0.0) || !(b >= a)) throw DomainError("intensity_mass: 0 <= a <= b required");
  if (a == b) return 0.0;
  QuadratureOptions opts;
  opts.abs_tol = 1e-300;
  opts.rel_tol = rel_tol;
  auto density = [](double x) { return x > 0.0 ? nu_mp(x) : 0.0; };
  return integrate(density, a, b, opts).value;
}

/// A single realization of the point process on (0, window_max]; points sorted ascending.
struct Realization {
  double window_max = 0.0;
  std::vector<double> points;
};

/// Cumulative intensity Lambda(x) tabulated on an adaptive grid with
/// piecewise-cubic Hermite interpolation (exact derivatives nu_mp at the nodes).
/// Immutable after construction.
class IntensityTable {
 public:
  [[nodiscard]] double x_max() const noexcept { return grid_.back(); }
  [[nodiscard]] double total_mass() const noexcept { return lambda_.back(); }
  [[nodiscard]] std::span<const double> grid() const noexcept { return grid_; }
  [[nodiscard]] std::span<const double> lambda_values() const noexcept { return lambda_; }
  [[nodiscard]] double tolerance() const noexcept { return tol_; }

  /// Interpolated Lambda(x) for x in [0, x_max].
  [[nodiscard]] double cumulative(double x) const {
    if (!(x >= 0.0) || x > x_max()) throw DomainError("IntensityTable::cumulative: x outside [0, x_max]");
    const auto it = std::upper_bound(grid_.begin(), grid_.end(), x);
    const std::size_t i = it == grid_.end() ? grid_.size() - 2
                                            : static_cast<std::size_t>(it - grid_.begin()) - 1;
    return hermite(i, (x - grid_[i]) / (grid_[i + 1] - grid_[i]));
  }

  /// Inverse of the interpolant: the x with cumulative(x) == mass, for mass in [0, total_mass].
  [[nodiscard]] double inverse(double mass) const {
    if (!(mass >= 0.0) || mass > total_mass()) throw DomainError("IntensityTable::inverse: mass outside [0, total]");
    const auto it = std::upper_bound(lambda_.begin(), lambda_.end(), mass);
    const std::size_t i = it == lambda_.end() ? lambda_.size() - 2
                                              : static_cast<std::size_t>(it - lambda_.begin()) - 1;
    // Safeguarded Newton on the monotone cubic over t in [0, 1].
    const double h = grid_[i + 1] - grid_[i];
    double lo = 0.0, hi = 1.0;
    double t = (mass - lambda_[i]) / (lambda_[i + 1] - lambda_[i]);
    // Residuals far below the table tolerance buy nothing.
    const double good_enough = 1e-3 * tol_ * total_mass();
    for (int iter = 0; iter < 100; ++iter) {
      const double f = hermite(i, t) - mass;
      if (std::fabs(f) <= good_enough) break;
      if (f > 0.0) hi = t; else lo = t;
      const double df = hermite_derivative(i, t) * h;
      double next = df > 0.0 ? t - f / df : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (std::fabs(next - t) <= 4.0 * std::numeric_limits<double>::epsilon()) {
        t = next;
        break;
      }
      t = next;
    }
    return grid_[i] + t * h;
  }

  friend IntensityTable build_intensity_table(double x_max, double tol, std::size_t max_nodes);

 private:
  [[nodiscard]] double hermite(std::size_t i, double t) const noexcept {
    const double h = grid_[i + 1] - grid_[i];
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * lambda_[i] + (t3 - 2 * t2 + t) * h * slope_[i] +
           (-2 * t3 + 3 * t2) * lambda_[i + 1] + (t3 - t2) * h * slope_[i + 1];
  }
  // d/dx of the interpolant at local coordinate t.
  [[nodiscard]] double hermite_derivative(std::size_t i, double t) const noexcept {
    const double h = grid_[i + 1] - grid_[i];
    const double t2 = t * t;
    return ((6 * t2 - 6 * t) * (lambda_[i] - lambda_[i + 1]) / h + (3 * t2 - 4 * t + 1) * slope_[i] +
            (3 * t2 - 2 * t) * slope_[i + 1]);
  }

  std::vector<double> grid_;
  std::vector<double> lambda_;
  std::vector<double> slope_;
  double tol_ = 0.0;
};

/// Tabulates Lambda on (0, x_max] so that interpolation (and its inverse) is
/// within tol * total_mass. Throws BudgetExceeded if more than max_nodes are needed.
inline IntensityTable build_intensity_table(double x_max, double tol,
                                            std::size_t max_nodes = 1'000'000) {
  if (!(x_max > 0.0) || !std::isfinite(x_max)) throw DomainError("build_intensity_table: x_max > 0 required");
  if (!(tol > 0.0 && tol < 1e-4)) throw DomainError("build_intensity_table: 0 < tol < 1e-4 required");

  const double crossover = std::min(kIntensitySeriesCrossover, x_max);
  const auto slope_at = [](double x) { return x > 0.0 ? nu_mp(x) : 0.0; };

  // Initial nodes: geometric up to 1 (nu ~ x/2 varies on a relative scale there),
  // then steps of at most 1/2.
  std::vector<double> nodes{0.0, crossover};
  for (double x = crossover * 2.0; x < std::min(1.0, x_max); x *= 2.0) nodes.push_back(x);
  for (double x = std::max(1.0, nodes.back() + 0.5); x < x_max; x += 0.5) nodes.push_back(x);
  if (nodes.back() < x_max) nodes.push_back(x_max);

  struct Segment {
    double a, b;
    double mass;  // exact Lambda(b) - Lambda(a)
  };
  auto exact_mass = [&](double a, double b) {
    if (b <= crossover) return cumulative_intensity_series(b) - cumulative_intensity_series(a);
    return intensity_mass(a, b);
  };

  std::vector<Segment> segments;
  for (std::size_t i = 1; i < nodes.size(); ++i)
    segments.push_back({nodes[i - 1], nodes[i], exact_mass(nodes[i - 1], nodes[i])});

  CompensatedSum total_acc;
  for (const auto& s : segments) total_acc += s.mass;
  const double total = total_acc.value();
  // Each segment's interpolation error is held to half the budget.
  const double budget = 0.5 * tol * total;

  // Hermite cubic on a segment, evaluated at local t, relative to Lambda(a).
  auto local_hermite = [&](const Segment& s, double t) {
    const double h = s.b - s.a;
    const double t2 = t * t, t3 = t2 * t;
    return (t3 - 2 * t2 + t) * h * slope_at(s.a) + (-2 * t3 + 3 * t2) * s.mass +
           (t3 - t2) * h * slope_at(s.b);
  };
  auto acceptable = [&](const Segment& s) {
    if (s.b <= crossover) return true;  // series-backed: exact quadratic-dominated cubic
    const double secant = s.mass / (s.b - s.a);
    const double alpha = slope_at(s.a) / secant, beta = slope_at(s.b) / secant;
    if (alpha * alpha + beta * beta > 9.0) return false;  // Fritsch-Carlson monotonicity
    for (const double t : {0.25, 0.5, 0.75}) {
      const double x = s.a + t * (s.b - s.a);
      if (std::fabs(local_hermite(s, t) - exact_mass(s.a, x)) > budget) return false;
    }
    return true;
  };

  std::vector<Segment> done;
  std::vector<Segment> pending(segments.rbegin(), segments.rend());
  while (!pending.empty()) {
    Segment s = pending.back();
    pending.pop_back();
    if (acceptable(s)) {
      done.push_back(s);
    } else {
      if (done.size() + pending.size() + 2 > max_nodes)
        throw BudgetExceeded("build_intensity_table: tolerance " + format_double(tol) +
                             " needs more than " + std::to_string(max_nodes) + " nodes");
      const double mid = 0.5 * (s.a + s.b);
      const double left = exact_mass(s.a, mid);
      pending.push_back({mid, s.b, s.mass - left});
      pending.push_back({s.a, mid, left});
    }
  }

  IntensityTable table;
  table.tol_ = tol;
  table.grid_.reserve(done.size() + 1);
  table.grid_.push_back(0.0);
  table.lambda_.push_back(0.0);
  table.slope_.push_back(0.0);
  CompensatedSum running;
  for (const auto& s : done) {
    running += s.mass;
    table.grid_.push_back(s.b);
    table.lambda_.push_back(running.value());
    table.slope_.push_back(slope_at(s.b));
  }
  for (std::size_t i = 1; i < table.lambda_.size(); ++i) {
    if (!(table.lambda_[i] > table.lambda_[i - 1]))
      throw BudgetExceeded("build_intensity_table: cumulative intensity not resolvable at this x_max");
  }
  return table;
}

/// Uniform double in the open interval (0, 1) from 53 random bits.
template <class Urbg>
[[nodiscard]] double uniform_open01(Urbg& rng) {
  static_assert(std::numeric_limits<typename Urbg::result_type>::digits >= 53);
  const auto bits = static_cast<std::uint64_t>(rng() - Urbg::min()) >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

/// One realization of the Poisson process with intensity nu_mp on (0, x_max]:
/// a Poisson(total_mass) count, then i.i.d. points placed by inverse CDF.
template <class Urbg>
[[nodiscard]] Realization sample_realization(const IntensityTable& table, Urbg& rng) {
  std::poisson_distribution<std::int64_t> count_dist(table.total_mass());
  const auto n = count_dist(rng);
  Realization r;
  r.window_max = table.x_max();
  r.points.reserve(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    const double x = table.inverse(uniform_open01(rng) * table.total_mass());
    // The interpolant inverse cannot return 0 for positive mass, but guard the open endpoint.
    r.points.push_back(x > 0.0 ? x : std::numeric_limits<double>::min());
  }
  std::sort(r.points.begin(), r.points.end());
  return r;
}

/// CSV rows `realization_id,point`.
inline void write_realizations_csv(std::ostream& out, std::span<const Realization> realizations) {
  out << "realization_id,point\n";
  for (std::size_t id = 0; id < realizations.size(); ++id) {
    for (const double p : realizations[id].points) out << id << ',' << format_double(p) << '\n';
  }
}

/// CSV rows `x,lambda` over the table nodes.
inline void write_table_csv(std::ostream& out, const IntensityTable& table) {
  out << "x,lambda\n";
  const auto grid = table.grid();
  const auto lambda = table.lambda_values();
  for (std::size_t i = 0; i < grid.size(); ++i)
    out << format_double(grid[i]) << ',' << format_double(lambda[i]) << '\n';
}

}  // namespace mpclt
