// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <span>

namespace mpclt {

/// Error-free transformation a + b = sum + err (Knuth TwoSum), valid for any
/// ordering of magnitudes.
struct TwoSum {
  double sum;
  double err;
};

[[nodiscard]] constexpr TwoSum two_sum(double a, double b) noexcept {
  const double s = a + b;
  const double bp = s - a;
  const double ap = s - bp;
  return {s, (a - ap) + (b - bp)};
}

/// Running sum with a separately accumulated rounding-error term
/// (Neumaier / Kahan-Babuska). Error bound is independent of the number of
/// terms to first order.
class CompensatedSum {
 public:
  constexpr CompensatedSum() noexcept = default;
  constexpr explicit CompensatedSum(double init) noexcept : sum_(init) {}

  constexpr CompensatedSum& operator+=(double value) noexcept {
    const auto [s, e] = two_sum(sum_, value);
    sum_ = s;
    compensation_ += e;
    return *this;
  }

  constexpr CompensatedSum& operator+=(const CompensatedSum& other) noexcept {
    *this += other.sum_;
    compensation_ += other.compensation_;
    return *this;
  }

  [[nodiscard]] constexpr double value() const noexcept { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

[[nodiscard]] inline double compensated_sum(std::span<const double> values) noexcept {
  CompensatedSum acc;
  for (const double v : values) acc += v;
  return acc.value();
}

}  // namespace mpclt
