// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <numbers>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "mpclt/campbell.hpp"
#include "mpclt/compensated.hpp"
#include "mpclt/errors.hpp"
#include "mpclt/format.hpp"
#include "mpclt/mp_process.hpp"
#include "mpclt/philox.hpp"
#include "mpclt/special.hpp"
#include "mpclt/statistic.hpp"

namespace mpclt {

/// Largest expected point count per realization run_ensemble accepts by default.
inline constexpr double kDefaultMaxExpectedPoints = 1e6;
inline constexpr double kDefaultTableTol = 1e-10;

struct EnsembleConfig {
  WindowParams params;
  std::int64_t realizations = 1;
  std::uint64_t master_seed = 0;
  int workers = 1;
  double max_expected_points = kDefaultMaxExpectedPoints;
  double table_tol = kDefaultTableTol;
};

/// Independent generator for realization `index` under `master_seed`.
[[nodiscard]] inline Philox4x32 realization_stream(std::uint64_t master_seed, std::uint64_t index) noexcept {
  return Philox4x32(master_seed, index);
}

/// Runs `body(i)` for i in [0, count) on `workers` threads with a shared
/// atomic index. Results must be stored by index; the first exception is rethrown.
template <class Body>
void parallel_for_index(std::size_t count, int workers, Body&& body) {
  const auto n_threads = static_cast<std::size_t>(std::max(1, workers));
  if (n_threads == 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < count && !failed; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };
  std::vector<std::jthread> pool;
  for (std::size_t t = 0; t < std::min(n_threads, count); ++t) pool.emplace_back(worker);
  pool.clear();  // joins
  if (error) std::rethrow_exception(error);
}

/// R independent samples of S_{L,tau} on the exact window (0, beta L].
/// Output depends only on (params, R, master_seed), never on `workers`.
[[nodiscard]] inline std::vector<double> run_ensemble(const EnsembleConfig& config) {
  config.params.validate();
  if (!(config.params.tau > 0.0)) throw ConfigError("tau > 0 required for ensemble runs");
  if (config.realizations < 1) throw ConfigError("R >= 1 required");
  if (config.workers < 1) throw ConfigError("workers >= 1 required");

  const double window = config.params.support_end();
  const auto table = build_intensity_table(window, config.table_tol);
  if (table.total_mass() > config.max_expected_points)
    throw BudgetExceeded("run_ensemble: expected " + format_double(table.total_mass()) +
                         " points per realization on (0, " + format_double(window) +
                         "] exceeds the guard of " + format_double(config.max_expected_points));

  std::vector<double> samples(static_cast<std::size_t>(config.realizations));
  parallel_for_index(samples.size(), config.workers, [&](std::size_t i) {
    auto rng = realization_stream(config.master_seed, i);
    samples[i] = eval_S(config.params, sample_realization(table, rng));
  });
  return samples;
}

struct KStatistics {
  double k2 = 0.0;
  double k3 = 0.0;
  double k4 = 0.0;
};

struct CentralMoments {
  double mean = 0.0;
  double m2 = 0.0;
  double m3 = 0.0;
  double m4 = 0.0;
};

/// Sample mean and central moments with 1/n normalization (two-pass, compensated).
[[nodiscard]] inline CentralMoments central_moments(std::span<const double> xs) {
  if (xs.empty()) throw DomainError("central_moments: empty sample");
  const auto n = static_cast<double>(xs.size());
  CentralMoments cm;
  cm.mean = compensated_sum(xs) / n;
  CompensatedSum s2, s3, s4;
  for (const double x : xs) {
    const double d = x - cm.mean;
    const double d2 = d * d;
    s2 += d2;
    s3 += d2 * d;
    s4 += d2 * d2;
  }
  cm.m2 = s2.value() / n;
  cm.m3 = s3.value() / n;
  cm.m4 = s4.value() / n;
  return cm;
}

/// Unbiased k-statistics k2, k3, k4 (Fisher).
[[nodiscard]] inline KStatistics k_statistics(std::span<const double> xs) {
  if (xs.size() < 5) throw DomainError("k_statistics: at least 5 samples required");
  const auto cm = central_moments(xs);
  const auto n = static_cast<double>(xs.size());
  KStatistics k;
  k.k2 = n / (n - 1.0) * cm.m2;
  k.k3 = n * n / ((n - 1.0) * (n - 2.0)) * cm.m3;
  k.k4 = n * n * ((n + 1.0) * cm.m4 - 3.0 * (n - 1.0) * cm.m2 * cm.m2) /
         ((n - 1.0) * (n - 2.0) * (n - 3.0));
  return k;
}

/// Exact one-sample Kolmogorov-Smirnov distance to the standard normal CDF.
[[nodiscard]] inline double ks_distance_normal(std::span<const double> z) {
  if (z.empty()) throw DomainError("ks_distance_normal: empty sample");
  std::vector<double> sorted(z.begin(), z.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double cdf = normal_cdf(sorted[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - cdf, cdf - static_cast<double>(i) / n});
  }
  return d;
}

/// Evenly spaced t-grid over [-t_max, t_max].
[[nodiscard]] inline std::vector<double> ecf_grid(std::size_t points = 101, double t_max = 5.0) {
  std::vector<double> t(points);
  for (std::size_t i = 0; i < points; ++i)
    t[i] = -t_max + 2.0 * t_max * static_cast<double>(i) / static_cast<double>(points - 1);
  return t;
}

[[nodiscard]] inline std::complex<double> empirical_cf(std::span<const double> z, double t) {
  CompensatedSum re, im;
  for (const double x : z) {
    re += std::cos(t * x);
    im += std::sin(t * x);
  }
  const auto n = static_cast<double>(z.size());
  return {re.value() / n, im.value() / n};
}

/// max_t |phi_emp(t) - exp(-t^2/2)| over the grid.
[[nodiscard]] inline double ecf_max_deviation(std::span<const double> z, std::span<const double> t_grid) {
  double worst = 0.0;
  for (const double t : t_grid)
    worst = std::max(worst, std::abs(empirical_cf(z, t) - std::exp(-0.5 * t * t)));
  return worst;
}

/// Variance used to standardize S.
enum class Standardization {
  goe,       ///< Sigma^2_GOE(f), the limiting variance
  campbell,  ///< kappa_2 at the current L
};

[[nodiscard]] inline std::string_view to_string(Standardization s) noexcept {
  return s == Standardization::goe ? "goe" : "campbell";
}

struct SampleSummary {
  std::int64_t R = 0;
  double mean = 0.0;
  double k2 = 0.0;
  double k3 = 0.0;
  double k4 = 0.0;
  double ks_distance = 0.0;
  double ecf_max_dev = 0.0;
  Standardization standardization = Standardization::goe;
};

/// (S - kappa_1) / sqrt(V) for the chosen standardization.
[[nodiscard]] inline std::vector<double> standardize(std::span<const double> samples,
                                                     const CumulantReport& report, Standardization mode) {
  const double variance = mode == Standardization::goe ? goe_variance(report.params.fhat) : report.kappa_at(2);
  if (!(variance > 0.0))
    throw DomainError(std::string("standardize: ") + std::string(to_string(mode)) + " variance must be positive");
  const double center = report.kappa_at(1);
  const double scale = 1.0 / std::sqrt(variance);
  std::vector<double> z(samples.size());
  std::transform(samples.begin(), samples.end(), z.begin(), [&](double s) { return (s - center) * scale; });
  return z;
}

[[nodiscard]] inline SampleSummary normality_report(std::span<const double> samples,
                                                    const CumulantReport& report,
                                                    Standardization mode = Standardization::goe) {
  if (samples.empty()) throw DomainError("normality_report: empty sample");
  SampleSummary s;
  s.R = static_cast<std::int64_t>(samples.size());
  s.standardization = mode;
  s.mean = compensated_sum(samples) / static_cast<double>(samples.size());
  if (samples.size() >= 5) {
    const auto k = k_statistics(samples);
    s.k2 = k.k2;
    s.k3 = k.k3;
    s.k4 = k.k4;
  }
  const auto z = standardize(samples, report, mode);
  s.ks_distance = ks_distance_normal(z);
  s.ecf_max_dev = ecf_max_deviation(z, ecf_grid());
  return s;
}

/// Standard errors of sample statistics estimated from contiguous batches.
struct BatchErrors {
  double mean = 0.0;
  double k2 = 0.0;
  double k3 = 0.0;
  double m4 = 0.0;  ///< fourth central moment
};

[[nodiscard]] inline BatchErrors batch_standard_errors(std::span<const double> samples, std::size_t batches = 20) {
  if (batches < 2 || samples.size() < 5 * batches)
    throw DomainError("batch_standard_errors: need >= 2 batches of >= 5 samples");
  const std::size_t size = samples.size() / batches;
  std::vector<double> means, k2s, k3s, m4s;
  for (std::size_t b = 0; b < batches; ++b) {
    const auto batch = samples.subspan(b * size, size);
    const auto cm = central_moments(batch);
    const auto k = k_statistics(batch);
    means.push_back(cm.mean);
    k2s.push_back(k.k2);
    k3s.push_back(k.k3);
    m4s.push_back(cm.m4);
  }
  auto se = [batches](const std::vector<double>& v) {
    const auto cm = central_moments(v);
    const auto B = static_cast<double>(batches);
    return std::sqrt(cm.m2 * B / (B - 1.0) / B);
  };
  return {se(means), se(k2s), se(k3s), se(m4s)};
}

/// CSV rows `index,S`.
inline void write_samples_csv(std::ostream& out, std::span<const double> samples) {
  out << "index,S\n";
  for (std::size_t i = 0; i < samples.size(); ++i) out << i << ',' << format_double(samples[i]) << '\n';
}

/// CSV rows `z,ecdf,normal_cdf` at each sorted standardized sample.
inline void write_ecdf_csv(std::ostream& out, std::span<const double> z) {
  std::vector<double> sorted(z.begin(), z.end());
  std::sort(sorted.begin(), sorted.end());
  out << "z,ecdf,normal_cdf\n";
  const auto n = static_cast<double>(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i)
    out << format_double(sorted[i]) << ',' << format_double((static_cast<double>(i) + 1.0) / n) << ','
        << format_double(normal_cdf(sorted[i])) << '\n';
}

/// CSV rows `t,re,im,gaussian` of the empirical characteristic function.
inline void write_ecf_csv(std::ostream& out, std::span<const double> z, std::span<const double> t_grid) {
  out << "t,re,im,gaussian\n";
  for (const double t : t_grid) {
    const auto phi = empirical_cf(z, t);
    out << format_double(t) << ',' << format_double(phi.real()) << ',' << format_double(phi.imag()) << ','
        << format_double(std::exp(-0.5 * t * t)) << '\n';
  }
}

}  // namespace mpclt
