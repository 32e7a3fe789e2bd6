// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "mpclt/campbell.hpp"
#include "mpclt/config.hpp"
#include "mpclt/ensemble.hpp"
#include "mpclt/errors.hpp"
#include "mpclt/format.hpp"
#include "mpclt/mp_process.hpp"
#include "mpclt/statistic.hpp"
#include "mpclt/version.hpp"

namespace mpclt {

/// Process exit codes.
enum ExitCode : int { kExitOk = 0, kExitInternal = 1, kExitConfig = 2, kExitBudget = 3, kExitIo = 4 };

/// Output files staged under a temporary name and renamed into place only by
/// commit(). Anything staged or already renamed is removed if the run fails.
class StagedOutputs {
 public:
  StagedOutputs() = default;
  StagedOutputs(const StagedOutputs&) = delete;
  StagedOutputs& operator=(const StagedOutputs&) = delete;
  ~StagedOutputs() {
    if (!committed_) discard();
  }

  std::ostream& open(const std::string& path) {
    auto& f = files_.emplace_back();
    f.path = path;
    f.temp = path + ".partial";
    f.stream = std::make_unique<std::ofstream>(f.temp, std::ios::binary | std::ios::trunc);
    if (!*f.stream) throw IoError("cannot open '" + f.temp + "' for writing");
    return *f.stream;
  }

  void commit() {
    for (auto& f : files_) {
      f.stream->flush();
      if (!*f.stream) throw IoError("write to '" + f.temp + "' failed");
      f.stream->close();
    }
    for (auto& f : files_) {
      std::error_code ec;
      std::filesystem::rename(f.temp, f.path, ec);
      if (ec) throw IoError("cannot rename '" + f.temp + "' to '" + f.path + "': " + ec.message());
      f.renamed = true;
    }
    committed_ = true;
  }

 private:
  void discard() noexcept {
    for (auto& f : files_) {
      std::error_code ec;
      if (f.stream) f.stream->close();
      std::filesystem::remove(f.renamed ? f.path : f.temp, ec);
    }
  }

  struct File {
    std::string path, temp;
    std::unique_ptr<std::ofstream> stream;
    bool renamed = false;
  };
  std::vector<File> files_;
  bool committed_ = false;
};

/// `#` comment lines with the version and every resolved config key.
inline void write_comment_header(std::ostream& out, const RunConfig& c) {
  out << "# mpclt " << kVersion << '\n';
  for (const auto& [k, v] : config_entries(c)) out << "# " << k << '=' << v << '\n';
}

[[nodiscard]] inline nlohmann::ordered_json config_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  for (const auto& [k, v] : config_entries(c)) j[k] = v;
  return j;
}

inline void write_json(std::ostream& out, nlohmann::ordered_json body, const RunConfig& c) {
  body["version"] = std::string(kVersion);
  body["config"] = config_json(c);
  out << body.dump(2) << '\n';
}

namespace detail {

inline void run_probe(const RunConfig& c, StagedOutputs& files, std::ostream& log) {
  const auto p = c.window();
  const double hi = c.x_max > 0.0 ? c.x_max : p.support_end();
  auto& out = files.open(c.out);
  write_comment_header(out, c);
  out << "x,H\n";
  const auto n = static_cast<std::size_t>(c.points);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = c.x_min + (hi - c.x_min) * static_cast<double>(i) / static_cast<double>(n - 1);
    out << format_double(x) << ',' << format_double(eval_H(p, x)) << '\n';
  }
  log << "probe L=" << format_double(p.L) << " tau=" << format_double(p.tau) << " points=" << n << " x=["
      << format_double(c.x_min) << ',' << format_double(hi) << "]\n";
}

inline void run_sample(const RunConfig& c, StagedOutputs& files, std::ostream& log) {
  const double window = c.window().support_end();
  const auto table = build_intensity_table(window, kDefaultTableTol);
  if (table.total_mass() > c.max_points)
    throw BudgetExceeded("sample: expected " + format_double(table.total_mass()) + " points per realization on (0, " +
                         format_double(window) + "] exceeds the guard of " + format_double(c.max_points));
  std::vector<Realization> rs(static_cast<std::size_t>(c.R));
  parallel_for_index(rs.size(), c.workers, [&](std::size_t i) {
    auto rng = realization_stream(c.seed, i);
    rs[i] = sample_realization(table, rng);
  });
  auto& out = files.open(c.out);
  write_comment_header(out, c);
  write_realizations_csv(out, rs);
  if (!c.table.empty()) {
    auto& t = files.open(c.table);
    write_comment_header(t, c);
    write_table_csv(t, table);
  }
  std::size_t total = 0;
  for (const auto& r : rs) total += r.points.size();
  log << "sample window=" << format_double(window) << " R=" << c.R << " expected_points=" << format_double(table.total_mass())
      << " mean_points=" << format_double(static_cast<double>(total) / static_cast<double>(rs.size())) << '\n';
}

inline void run_cumulants(const RunConfig& c, StagedOutputs& files, std::ostream& log) {
  std::vector<CumulantReport> reports(c.L.size() * c.tau.size());
  parallel_for_index(reports.size(), c.workers, [&](std::size_t k) {
    reports[k] = cumulants(c.window(k / c.tau.size(), k % c.tau.size()), c.M, c.tol, c.delta);
  });
  auto& out = files.open(c.out);
  write_comment_header(out, c);
  write_cumulants_csv(out, reports);
  for (const auto& r : reports)
    for (int m = 1; m <= r.max_order; ++m) {
      const auto i = static_cast<std::size_t>(m - 1);
      log << "L=" << format_double(r.params.L) << " tau=" << format_double(r.params.tau) << " m=" << m
          << " kappa=" << format_double(r.kappa[i]) << " quad_error=" << format_double(r.quad_error[i])
          << " tail_bound=" << format_double(r.tail_bound[i]) << '\n';
    }
}

inline void run_decay(const RunConfig& c, StagedOutputs& files, std::ostream& log) {
  std::vector<CumulantReport> reports(c.L.size());
  parallel_for_index(reports.size(), c.workers,
                     [&](std::size_t k) { reports[k] = cumulants(c.window(k), c.m, c.tol, c.delta); });
  const auto fit = fit_decay(c.m, reports);
  for (const auto& r : reports)
    log << "L=" << format_double(r.params.L) << " m=" << c.m << " kappa=" << format_double(r.kappa_at(c.m)) << '\n';
  for (const auto& w : fit.warnings) log << "warning: " << w << '\n';
  log << "m=" << c.m << " slope=" << format_double(fit.plain.slope)
      << " slope_log_corrected=" << format_double(fit.log_corrected.slope)
      << " residual=" << format_double(fit.log_corrected.residual) << '\n';

  nlohmann::ordered_json j;
  j["m"] = c.m;
  j["slope"] = fit.plain.slope;
  j["slope_log_corrected"] = fit.log_corrected.slope;
  j["residual"] = fit.log_corrected.residual;
  j["residual_plain"] = fit.plain.residual;
  j["used_L"] = fit.used_L;
  j["warnings"] = fit.warnings;
  write_json(files.open(c.out), std::move(j), c);
}

inline void run_clt(const RunConfig& c, StagedOutputs& files, std::ostream& log) {
  const auto p = c.window();
  const auto report = cumulants(p, std::max(c.M, 2), c.tol, c.delta);
  EnsembleConfig ec{p, c.R, c.seed, c.workers, c.max_points, kDefaultTableTol};
  const auto samples = run_ensemble(ec);
  const auto goe = normality_report(samples, report, Standardization::goe);
  const auto camp = normality_report(samples, report, Standardization::campbell);

  auto& out = files.open(c.out);
  write_comment_header(out, c);
  write_samples_csv(out, samples);

  nlohmann::ordered_json j;
  j["L"] = p.L;
  j["tau"] = p.tau;
  j["beta"] = p.fhat.beta;
  j["family"] = std::string(to_string(p.fhat.family));
  j["R"] = c.R;
  j["seed"] = c.seed;
  j["mean"] = goe.mean;
  j["k2"] = goe.k2;
  j["k3"] = goe.k3;
  j["k4"] = goe.k4;
  j["ks_goe"] = goe.ks_distance;
  j["ks_campbell"] = camp.ks_distance;
  j["ecf_max_dev"] = goe.ecf_max_dev;
  j["kappa1"] = report.kappa_at(1);
  j["kappa2"] = report.kappa_at(2);
  j["sigma2_goe"] = goe_variance(p.fhat);
  write_json(files.open(c.summary), std::move(j), c);

  if (!c.ecdf.empty() || !c.ecf.empty()) {
    const auto z = standardize(samples, report, Standardization::goe);
    if (!c.ecdf.empty()) {
      auto& e = files.open(c.ecdf);
      write_comment_header(e, c);
      write_ecdf_csv(e, z);
    }
    if (!c.ecf.empty()) {
      auto& e = files.open(c.ecf);
      write_comment_header(e, c);
      write_ecf_csv(e, z, ecf_grid());
    }
  }
  log << "clt L=" << format_double(p.L) << " tau=" << format_double(p.tau) << " R=" << c.R
      << " mean=" << format_double(goe.mean) << " k2=" << format_double(goe.k2) << " k3=" << format_double(goe.k3)
      << " k4=" << format_double(goe.k4) << " ks_goe=" << format_double(goe.ks_distance)
      << " ks_campbell=" << format_double(camp.ks_distance) << " ecf_max_dev=" << format_double(goe.ecf_max_dev)
      << '\n';
}

inline void run_bounds(const RunConfig& c, StagedOutputs& files, std::ostream& log) {
  std::vector<WindowParams> ladder;
  double x_end = 0.0;
  for (std::size_t i = 0; i < c.L.size(); ++i) {
    ladder.push_back(c.window(i));
    x_end = std::max(x_end, ladder.back().support_end());
  }
  const auto prof = bound_profile(ladder, default_bound_grid(x_end), c.tau);
  auto& out = files.open(c.out);
  write_comment_header(out, c);
  write_bound_csv(out, prof);
  for (std::size_t i = 0; i < prof.L_values.size(); ++i)
    log << "L=" << format_double(prof.L_values[i]) << " r_small=" << format_double(prof.r_small[i])
        << " r_large=" << format_double(prof.r_large[i]) << '\n';
}

}  // namespace detail

/// Runs a validated config. Outputs appear only if every step succeeds.
inline void execute(const RunConfig& c, std::ostream& log) {
  validate(c);
  StagedOutputs files;
  switch (c.command) {
    case Command::probe: detail::run_probe(c, files, log); break;
    case Command::sample: detail::run_sample(c, files, log); break;
    case Command::cumulants: detail::run_cumulants(c, files, log); break;
    case Command::decay: detail::run_decay(c, files, log); break;
    case Command::clt: detail::run_clt(c, files, log); break;
    case Command::bounds: detail::run_bounds(c, files, log); break;
  }
  files.commit();
}

/// One machine-parsable line: `error code=<n> kind=<kind> message="<text>"`.
inline void report_error(std::ostream& err, int code, std::string_view kind, std::string message) {
  for (auto& ch : message)
    if (ch == '\n' || ch == '"') ch = ch == '"' ? '\'' : ' ';
  err << "error code=" << code << " kind=" << kind << " message=\"" << message << "\"\n";
}

/// Parse, execute and map failures to exit codes.
inline int run_cli(const std::vector<std::string>& args, std::optional<std::string> env_workers, std::ostream& log,
                   std::ostream& err) {
  try {
    const auto config = parse_config(args, std::move(env_workers));
    execute(config, log);
    return kExitOk;
  } catch (const HelpRequested& h) {
    log << h.text;
    return kExitOk;
  } catch (const ConfigError& e) {
    report_error(err, kExitConfig, "config", e.what());
    return kExitConfig;
  } catch (const DomainError& e) {
    report_error(err, kExitConfig, "domain", e.what());
    return kExitConfig;
  } catch (const BudgetExceeded& e) {
    report_error(err, kExitBudget, "budget", e.what());
    return kExitBudget;
  } catch (const IoError& e) {
    report_error(err, kExitIo, "io", e.what());
    return kExitIo;
  } catch (const std::exception& e) {
    report_error(err, kExitInternal, "internal", e.what());
    return kExitInternal;
  }
}

}  // namespace mpclt
