// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "mpclt/mp_process.hpp"
#include "mpclt/philox.hpp"
#include "oracles.hpp"

namespace mpclt {
namespace {

TEST(NuMp, ReferenceValues) {
  // 40-digit references for cosh(1) - 1 and (cosh(2) - 1)/2.
  EXPECT_NEAR(nu_mp(1.0), 0.5430806348152437784779056207570616826015, 1e-15);
  EXPECT_NEAR(nu_mp(2.0), 1.381097845541815729781106738886873054147, 1e-15);
}

TEST(NuMp, SmallArgumentLimitAndAccuracy) {
  EXPECT_NEAR(nu_mp(1e-8) / 1e-8, 0.5, 1e-15);
  for (double x = 1e-8; x < 10.0; x *= 1.37) {
    const long double s = std::sinh(x / 2.0L);
    const long double ref = 2.0L * s * s / x;
    EXPECT_NEAR(nu_mp(x) / static_cast<double>(ref), 1.0, 1e-12) << x;
  }
}

TEST(NuMp, NonPositiveRejected) {
  EXPECT_THROW((void)nu_mp(0.0), DomainError);
  EXPECT_THROW((void)nu_mp(-1.0), DomainError);
}

TEST(IntensityTable, TinyWindowMatchesSeries) {
  const auto t = build_intensity_table(1e-3, 1e-10);
  // mpmath reference for int_0^{1e-3} nu_mp.
  EXPECT_NEAR(t.total_mass() / 2.500000104166668981481512483465884038802e-7, 1.0, 1e-8);
}

TEST(IntensityTable, TotalMassAgainstFixedStepSimpson) {
  const auto t = build_intensity_table(10.0, 1e-10);
  // Simpson on [1e-4, 10] at step 1e-5 plus the analytic patch on [0, 1e-4].
  const long double simpson = oracle::simpson(oracle::nu_direct, 1e-4L, 10.0L, 1e-5L) +
                              1e-8L / 4.0L;
  EXPECT_NEAR(t.total_mass() / static_cast<double>(simpson), 1.0, 1e-8);
  EXPECT_NEAR(t.total_mass() / 1243.234685284558836181933429753065752717, 1.0, 1e-10);
}

TEST(IntensityTable, StrictlyIncreasingFromZero) {
  const auto t = build_intensity_table(16.0, 1e-10);
  ASSERT_EQ(t.lambda_values().front(), 0.0);
  ASSERT_EQ(t.grid().front(), 0.0);
  for (std::size_t i = 1; i < t.grid().size(); ++i) {
    ASSERT_GT(t.grid()[i], t.grid()[i - 1]);
    ASSERT_GT(t.lambda_values()[i], t.lambda_values()[i - 1]);
  }
  EXPECT_EQ(t.grid().back(), 16.0);
}

TEST(IntensityTable, AdditivityAgainstDirectQuadrature) {
  const double tol = 1e-9;
  const auto t = build_intensity_table(8.0, tol);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(1e-3, 8.0);
  for (int i = 0; i < 200; ++i) {
    double a = u(rng), b = u(rng);
    if (a > b) std::swap(a, b);
    const long double direct = oracle::simpson(oracle::nu_direct, a, b, 1e-4L);
    EXPECT_NEAR(t.cumulative(b) - t.cumulative(a), static_cast<double>(direct), tol * t.total_mass());
  }
}

TEST(IntensityTable, InverseRoundTrip) {
  const double tol = 1e-10;
  const auto t = build_intensity_table(12.0, tol);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 100'000; ++i) {
    const double target = u(rng) * t.total_mass();
    ASSERT_NEAR(t.cumulative(t.inverse(target)), target, tol * t.total_mass());
  }
}

TEST(IntensityTable, InterpolationWithinToleranceOfTotalMass) {
  const double tol = 1e-8;
  const auto t = build_intensity_table(6.0, tol);
  for (double x = 0.01; x < 6.0; x += 0.0137) {
    const double exact = intensity_mass(0.0, x);
    EXPECT_NEAR(t.cumulative(x), exact, tol * t.total_mass()) << x;
  }
}

TEST(IntensityTable, Errors) {
  EXPECT_THROW((void)build_intensity_table(0.0, 1e-8), DomainError);
  EXPECT_THROW((void)build_intensity_table(5.0, 1e-3), DomainError);
  EXPECT_THROW((void)build_intensity_table(30.0, 1e-14, 50), BudgetExceeded);
  const auto t = build_intensity_table(2.0, 1e-8);
  EXPECT_THROW((void)t.cumulative(2.5), DomainError);
  EXPECT_THROW((void)t.inverse(-1.0), DomainError);
}

TEST(Sampler, EmptyFractionForUnitMassTwo) {
  const auto wide = build_intensity_table(10.0, 1e-12);
  const auto t = build_intensity_table(wide.inverse(2.0), 1e-10);
  ASSERT_NEAR(t.total_mass(), 2.0, 1e-9);
  const int n = 40'000;
  int empty = 0;
  for (int i = 0; i < n; ++i) {
    Philox4x32 rng(11, static_cast<std::uint64_t>(i));
    empty += sample_realization(t, rng).points.empty();
  }
  const double p = std::exp(-2.0);
  EXPECT_NEAR(static_cast<double>(empty) / n, p, 4.0 * std::sqrt(p * (1 - p) / n));
}

TEST(Sampler, CountsMeanVarianceAndBinnedGoodnessOfFit) {
  const double X = 6.0;
  const auto t = build_intensity_table(X, 1e-10);
  const int draws = 10'000, bins = 30;
  std::vector<double> counts;
  std::vector<double> binned(bins, 0.0);
  std::vector<double> first_half, second_half;
  for (int i = 0; i < draws; ++i) {
    Philox4x32 rng(123, static_cast<std::uint64_t>(i));
    const auto r = sample_realization(t, rng);
    ASSERT_TRUE(std::is_sorted(r.points.begin(), r.points.end()));
    int lo = 0;
    for (const double p : r.points) {
      ASSERT_GT(p, 0.0);
      ASSERT_LE(p, X);
      const int b = std::min(bins - 1, static_cast<int>(p / X * bins));
      binned[static_cast<std::size_t>(b)] += 1;
      lo += p <= 5.0;
    }
    counts.push_back(static_cast<double>(r.points.size()));
    first_half.push_back(lo);
    second_half.push_back(static_cast<double>(r.points.size()) - lo);
  }
  double mean = 0, var = 0;
  for (double c : counts) mean += c;
  mean /= draws;
  for (double c : counts) var += (c - mean) * (c - mean);
  var /= draws - 1;
  EXPECT_NEAR(mean, t.total_mass(), 4.0 * std::sqrt(t.total_mass() / draws));
  EXPECT_GE(var / mean, 0.9);
  EXPECT_LE(var / mean, 1.1);

  double chi2 = 0.0;
  for (int b = 0; b < bins; ++b) {
    const double a = X * b / bins, c = X * (b + 1) / bins;
    const double expected = draws * (t.cumulative(c) - t.cumulative(a));
    chi2 += (binned[b] - expected) * (binned[b] - expected) / expected;
  }
  const boost::math::chi_squared dist(bins - 1);
  EXPECT_GE(boost::math::cdf(boost::math::complement(dist, chi2)), 1e-3);

  // Disjoint intervals (0, 5] and (5, 6] are uncorrelated.
  double m1 = 0, m2 = 0;
  for (int i = 0; i < draws; ++i) {
    m1 += first_half[i];
    m2 += second_half[i];
  }
  m1 /= draws;
  m2 /= draws;
  double sxy = 0, sxx = 0, syy = 0;
  for (int i = 0; i < draws; ++i) {
    sxy += (first_half[i] - m1) * (second_half[i] - m2);
    sxx += (first_half[i] - m1) * (first_half[i] - m1);
    syy += (second_half[i] - m2) * (second_half[i] - m2);
  }
  EXPECT_LE(std::fabs(sxy / std::sqrt(sxx * syy)), 0.05);
}

TEST(Sampler, PoissonDispersionAtLargeMass) {
  const auto t = build_intensity_table(7.5, 1e-10);
  ASSERT_GE(t.total_mass(), 50.0);
  const int draws = 10'000;
  double s = 0, s2 = 0;
  for (int i = 0; i < draws; ++i) {
    Philox4x32 rng(77, static_cast<std::uint64_t>(i));
    const double n = static_cast<double>(sample_realization(t, rng).points.size());
    s += n;
    s2 += n * n;
  }
  const double mean = s / draws;
  const double var = (s2 - draws * mean * mean) / (draws - 1);
  EXPECT_GE(var / mean, 0.9);
  EXPECT_LE(var / mean, 1.1);
}

TEST(Export, RealizationAndTableCsv) {
  std::vector<Realization> rs{{2.0, {0.5, 1.25}}, {2.0, {}}, {2.0, {0.1}}};
  std::ostringstream os;
  write_realizations_csv(os, rs);
  EXPECT_EQ(os.str(), "realization_id,point\n0,0.5\n0,1.25\n2,0.10000000000000001\n");

  const auto t = build_intensity_table(1.0, 1e-8);
  std::ostringstream ts;
  write_table_csv(ts, t);
  EXPECT_EQ(ts.str().rfind("x,lambda\n0,0\n", 0), 0u);
}

}  // namespace
}  // namespace mpclt
