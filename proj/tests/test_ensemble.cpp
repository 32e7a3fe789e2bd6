// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "mpclt/campbell.hpp"
#include "mpclt/ensemble.hpp"

namespace mpclt {
namespace {

const TestFunctionSpec kTri{FhatFamily::triangular, 1.0};

CumulantReport unit_report(double k1, double k2) {
  return CumulantReport{{8.0, 1.0, kTri}, 2, kDefaultDelta, kDefaultCumulantTol, {k1, k2}, {0.0, 0.0}, {0.0, 0.0}};
}

std::vector<double> normal_draws(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<double> v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

TEST(RunEnsemble, EmptyRealizationGivesZero) {
  // beta L = 0.8 holds about 0.17 expected points, so most streams are empty.
  EnsembleConfig cfg{{8.0, 1.0, {FhatFamily::triangular, 0.1}}, 1, 0, 1};
  const auto table = build_intensity_table(cfg.params.support_end(), cfg.table_tol);
  std::uint64_t seed = 0;
  for (;; ++seed) {
    auto rng = realization_stream(seed, 0);
    if (sample_realization(table, rng).points.empty()) break;
  }
  cfg.master_seed = seed;
  const auto s = run_ensemble(cfg);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s.front(), 0.0);
}

TEST(RunEnsemble, BitIdenticalAcrossWorkerCounts) {
  EnsembleConfig cfg{{6.0, 1.0, kTri}, 400, 99, 1};
  const auto one = run_ensemble(cfg);
  cfg.workers = 8;
  const auto eight = run_ensemble(cfg);
  cfg.workers = 3;
  const auto three = run_ensemble(cfg);
  EXPECT_EQ(one, eight);
  EXPECT_EQ(one, three);
  EXPECT_EQ(one, run_ensemble(cfg));
}

TEST(RunEnsemble, PrefixStableInR) {
  EnsembleConfig cfg{{6.0, 1.0, kTri}, 50, 7, 2};
  const auto small = run_ensemble(cfg);
  cfg.realizations = 80;
  const auto big = run_ensemble(cfg);
  EXPECT_TRUE(std::equal(small.begin(), small.end(), big.begin()));
}

TEST(RunEnsemble, GuardNamesExpectedPointCount) {
  EnsembleConfig cfg{{20.0, 1.0, kTri}, 1, 0, 1};
  try {
    (void)run_ensemble(cfg);
    FAIL() << "guard did not trigger";
  } catch (const BudgetExceeded& e) {
    EXPECT_NE(std::string(e.what()).find("expected"), std::string::npos);
  }
}

TEST(RunEnsemble, ConfigValidation) {
  EXPECT_THROW((void)run_ensemble({{8.0, 0.0, kTri}, 1, 0, 1}), ConfigError);
  EXPECT_THROW((void)run_ensemble({{8.0, 1.0, kTri}, 0, 0, 1}), ConfigError);
  EXPECT_THROW((void)run_ensemble({{8.0, 1.0, kTri}, 1, 0, 0}), ConfigError);
  EXPECT_THROW((void)run_ensemble({{1.5, 1.0, kTri}, 1, 0, 1}), ConfigError);
}

TEST(RunEnsemble, WorkerExceptionPropagates) {
  EXPECT_THROW(parallel_for_index(100, 4,
                                  [](std::size_t i) {
                                    if (i == 37) throw DomainError("boom");
                                  }),
               DomainError);
}

TEST(RunEnsemble, MeanAgreesWithCampbellAtSmallR) {
  const WindowParams p{8.0, 1.0, kTri};
  const auto report = cumulants(p, 2);
  const auto s = run_ensemble({p, 5000, 2024, 2});
  const double mean = compensated_sum(s) / static_cast<double>(s.size());
  EXPECT_NEAR(mean, report.kappa_at(1), 4.0 * std::sqrt(report.kappa_at(2) / 5000.0));
}

TEST(KStatistics, ConstantAndSymmetricSamples) {
  const std::vector<double> c(10, 3.25);
  const auto k = k_statistics(c);
  EXPECT_EQ(k.k2, 0.0);
  EXPECT_EQ(k.k3, 0.0);
  EXPECT_EQ(k.k4, 0.0);

  std::vector<double> sym;
  for (int i = 0; i < 50; ++i) {
    sym.push_back(-1.75);
    sym.push_back(1.75);
  }
  EXPECT_NEAR(k_statistics(sym).k3, 0.0, 1e-15);
  EXPECT_THROW((void)k_statistics(std::vector<double>{1, 2, 3, 4}), DomainError);
}

TEST(KStatistics, MatchPowerSumFormulas) {
  std::mt19937_64 rng(8);
  std::exponential_distribution<double> ex(1.5);
  std::uniform_int_distribution<int> size(5, 60);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> v(static_cast<std::size_t>(size(rng)));
    for (auto& x : v) x = ex(rng) - 0.3;
    long double s1 = 0, s2 = 0, s3 = 0, s4 = 0;
    for (const double x : v) {
      const long double y = x;
      s1 += y;
      s2 += y * y;
      s3 += y * y * y;
      s4 += y * y * y * y;
    }
    const long double n = static_cast<long double>(v.size());
    const long double k3 = (2 * s1 * s1 * s1 - 3 * n * s1 * s2 + n * n * s3) / (n * (n - 1) * (n - 2));
    const long double k4 = (-6 * s1 * s1 * s1 * s1 + 12 * n * s1 * s1 * s2 - 3 * n * (n - 1) * s2 * s2 -
                            4 * n * (n + 1) * s1 * s3 + n * n * (n + 1) * s4) /
                           (n * (n - 1) * (n - 2) * (n - 3));
    const auto k = k_statistics(v);
    ASSERT_GE(k.k2, 0.0);
    ASSERT_NEAR(k.k3, static_cast<double>(k3), 1e-10 * (1 + std::fabs(static_cast<double>(k3))));
    ASSERT_NEAR(k.k4, static_cast<double>(k4), 1e-10 * (1 + std::fabs(static_cast<double>(k4))));
  }
}

TEST(KStatistics, StandardNormalMillionDraws) {
  const auto v = normal_draws(1'000'000, 314);
  const auto k = k_statistics(v);
  EXPECT_NEAR(k.k2, 1.0, 0.01);
  EXPECT_NEAR(k.k3, 0.0, 0.01);
  EXPECT_NEAR(k.k4, 0.0, 0.03);
}

TEST(KsDistance, NullSampleWithinOnePercentBound) {
  const std::size_t R = 10'000;
  const auto s = normality_report(normal_draws(R, 5), unit_report(0.0, 1.0), Standardization::campbell);
  EXPECT_LE(s.ks_distance, 1.63 / std::sqrt(static_cast<double>(R)));
  EXPECT_LE(s.ecf_max_dev, 0.05);
}

TEST(KsDistance, SinglePointAtMedian) {
  const std::vector<double> z{0.0};
  EXPECT_DOUBLE_EQ(ks_distance_normal(z), 0.5);
}

TEST(Ecf, EqualsOneAtZero) {
  const auto z = normal_draws(1000, 6);
  const auto phi = empirical_cf(z, 0.0);
  EXPECT_EQ(phi.real(), 1.0);
  EXPECT_EQ(phi.imag(), 0.0);
  const auto grid = ecf_grid();
  ASSERT_EQ(grid.size(), 101u);
  EXPECT_EQ(grid[50], 0.0);
  EXPECT_EQ(grid.front(), -5.0);
  EXPECT_EQ(grid.back(), 5.0);
}

TEST(NormalityReport, SummaryRangesOnArbitrarySamples) {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> size(1, 200);
  std::cauchy_distribution<double> heavy;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(static_cast<std::size_t>(size(rng)));
    for (auto& x : v) x = heavy(rng);
    const auto s = normality_report(v, unit_report(0.0, 1.0), trial % 2 ? Standardization::goe
                                                                         : Standardization::campbell);
    ASSERT_GE(s.k2, 0.0);
    ASSERT_GE(s.ks_distance, 0.0);
    ASSERT_LE(s.ks_distance, 1.0);
    ASSERT_GE(s.ecf_max_dev, 0.0);
    ASSERT_LE(s.ecf_max_dev, 2.0);
  }
}

TEST(NormalityReport, CampbellModeNeedsPositiveVariance) {
  const auto v = normal_draws(20, 1);
  EXPECT_THROW((void)normality_report(v, unit_report(0.0, 0.0), Standardization::campbell), DomainError);
  EXPECT_NO_THROW((void)normality_report(v, unit_report(0.0, 0.0), Standardization::goe));
  EXPECT_THROW((void)normality_report(std::vector<double>{}, unit_report(0.0, 1.0)), DomainError);
}

TEST(NormalityReport, GoeModeUsesLimitVariance) {
  // S = kappa_1 + sqrt(1/3) * N(0,1) standardizes to N(0,1) in goe mode.
  auto v = normal_draws(5000, 12);
  for (auto& x : v) x = 2.0 + std::sqrt(1.0 / 3.0) * x;
  const auto s = normality_report(v, unit_report(2.0, 0.1), Standardization::goe);
  EXPECT_LE(s.ks_distance, 1.63 / std::sqrt(5000.0));
}

TEST(BatchErrors, MeanErrorMatchesCentralLimit) {
  const auto v = normal_draws(100'000, 21);
  const auto se = batch_standard_errors(v, 20);
  EXPECT_NEAR(se.mean, 1.0 / std::sqrt(1e5), 0.5 / std::sqrt(1e5));
  // Var(k2) ~ 2/n, Var(m4) ~ 96/n for a standard normal.
  EXPECT_NEAR(se.k2, std::sqrt(2.0 / 1e5), 0.5 * std::sqrt(2.0 / 1e5));
  EXPECT_NEAR(se.m4, std::sqrt(96.0 / 1e5), 0.5 * std::sqrt(96.0 / 1e5));
  EXPECT_THROW((void)batch_standard_errors(std::vector<double>(50, 1.0), 20), DomainError);
}

TEST(Export, SamplesEcdfEcf) {
  const std::vector<double> s{0.1, -2.0};
  std::ostringstream a, b, c;
  write_samples_csv(a, s);
  EXPECT_EQ(a.str(), "index,S\n0,0.10000000000000001\n1,-2\n");
  write_ecdf_csv(b, s);
  EXPECT_EQ(b.str().rfind("z,ecdf,normal_cdf\n-2,0.5,", 0), 0u);
  const std::vector<double> t{0.0};
  write_ecf_csv(c, s, t);
  EXPECT_EQ(c.str(), "t,re,im,gaussian\n0,1,0,1\n");
}

}  // namespace
}  // namespace mpclt
