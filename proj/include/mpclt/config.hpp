// SPDX-License-Identifier: Apache-2.0
//
// Run configuration for the command-line front end. Flags and a flat
// key=value file share one set of keys; flags win over the file, and the
// MPCLT_WORKERS environment variable sits between the two for `workers`.
#pragma once

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "mpclt/campbell.hpp"
#include "mpclt/errors.hpp"
#include "mpclt/format.hpp"
#include "mpclt/mp_process.hpp"
#include "mpclt/statistic.hpp"
#include "mpclt/testfn.hpp"

namespace mpclt {

enum class Command { probe, sample, cumulants, decay, clt, bounds };

inline constexpr std::string_view kCommandNames[] = {"probe", "sample", "cumulants", "decay", "clt", "bounds"};

[[nodiscard]] inline std::string_view to_string(Command c) noexcept {
  return kCommandNames[static_cast<std::size_t>(c)];
}

[[nodiscard]] inline Command parse_command(std::string_view name) {
  for (std::size_t i = 0; i < std::size(kCommandNames); ++i)
    if (kCommandNames[i] == name) return static_cast<Command>(i);
  throw ConfigError("unknown command '" + std::string(name) + "'");
}

[[nodiscard]] inline int default_workers() noexcept {
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

struct RunConfig {
  Command command = Command::cumulants;
  TestFunctionSpec fhat{};
  std::vector<double> L{8.0};
  std::vector<double> tau{1.0};
  std::int64_t R = 10'000;
  std::uint64_t seed = 1;
  int workers = 1;
  double tol = kDefaultCumulantTol;
  double delta = kDefaultDelta;
  int M = kDefaultMaxOrder;
  int m = 3;                  ///< cumulant order for `decay`
  double x_min = 1e-3;        ///< `probe` grid start
  double x_max = 0.0;         ///< `probe` grid end; 0 means beta L
  int points = 1000;          ///< `probe` grid size
  double max_points = 1e6;    ///< expected points per realization guard
  std::string out;            ///< primary output file
  std::string summary;        ///< `clt` summary JSON
  std::string ecdf;           ///< optional `clt` ECDF export
  std::string ecf;            ///< optional `clt` ECF export
  std::string table;          ///< optional `sample` intensity table export

  bool operator==(const RunConfig&) const = default;

  [[nodiscard]] WindowParams window(std::size_t i = 0, std::size_t j = 0) const { return {L.at(i), tau.at(j), fhat}; }
};

[[nodiscard]] inline std::string default_output(Command c) {
  return c == Command::decay ? "decay.json" : c == Command::clt ? "clt_samples.csv" : std::string(to_string(c)) + ".csv";
}

/// Rejects invalid values and command/parameter combinations.
inline void validate(const RunConfig& c) {
  c.fhat.validate();
  if (c.L.empty()) throw ConfigError("at least one L value required");
  if (c.tau.empty()) throw ConfigError("at least one tau value required");
  for (const double L : c.L) WindowParams{L, 0.0, c.fhat}.validate();
  for (const double t : c.tau) WindowParams{c.L.front(), t, c.fhat}.validate();
  if (c.R < 1) throw ConfigError("R >= 1 required");
  if (c.workers < 1) throw ConfigError("workers >= 1 required");
  if (!(c.tol > 0.0 && c.tol < 1.0)) throw ConfigError("0 < tol < 1 required");
  if (!(c.delta > 0.0 && c.delta <= 1e-2)) throw ConfigError("0 < delta <= 1e-2 required");
  if (c.M < 2) throw ConfigError("M >= 2 required");
  if (!(c.max_points > 0.0)) throw ConfigError("max_points > 0 required");
  if (c.out.empty()) throw ConfigError("output path must not be empty");

  const bool scalar_L = c.L.size() == 1, scalar_tau = c.tau.size() == 1;
  switch (c.command) {
    case Command::probe:
      if (!scalar_L || !scalar_tau) throw ConfigError("probe requires a single L and a single tau");
      if (c.points < 2) throw ConfigError("points >= 2 required");
      if (!(c.x_min > 0.0)) throw ConfigError("x_min > 0 required");
      if (!(c.x_max == 0.0 || c.x_max > c.x_min)) throw ConfigError("x_max > x_min required (or 0 for beta L)");
      if (c.x_max == 0.0 && !(c.x_min < c.window().support_end()))
        throw ConfigError("x_min < beta L required when x_max is 0");
      break;
    case Command::sample:
      if (!scalar_L) throw ConfigError("sample requires a single L");
      break;
    case Command::cumulants:
      break;
    case Command::decay:
      if (!scalar_tau) throw ConfigError("decay requires a single tau");
      if (c.m < 3) throw ConfigError("decay requires m >= 3");
      if (c.L.size() < 4) throw ConfigError("decay requires a ladder of at least 4 L values");
      break;
    case Command::clt:
      if (!scalar_L || !scalar_tau) throw ConfigError("clt requires a single L and a single tau");
      if (!(c.tau.front() > 0.0)) throw ConfigError("tau > 0 required for CLT mode");
      if (c.R < 5) throw ConfigError("clt requires R >= 5");
      if (c.summary.empty()) throw ConfigError("summary path must not be empty");
      break;
    case Command::bounds:
      break;
  }
}

namespace detail {

inline std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
  return s;
}

}  // namespace detail

/// Flat key=value text, one key per line, in a fixed order. Empty optional
/// paths are omitted.
[[nodiscard]] inline std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& c) {
  std::vector<std::pair<std::string, std::string>> e{
      {"command", std::string(to_string(c.command))},
      {"fhat", std::string(to_string(c.fhat.family))},
      {"beta", format_double(c.fhat.beta)},
      {"L", detail::join(c.L)},
      {"tau", detail::join(c.tau)},
      {"R", std::to_string(c.R)},
      {"seed", std::to_string(c.seed)},
      {"workers", std::to_string(c.workers)},
      {"tol", format_double(c.tol)},
      {"delta", format_double(c.delta)},
      {"M", std::to_string(c.M)},
      {"m", std::to_string(c.m)},
      {"x_min", format_double(c.x_min)},
      {"x_max", format_double(c.x_max)},
      {"points", std::to_string(c.points)},
      {"max_points", format_double(c.max_points)},
  };
  for (const auto& [key, value] : {std::pair<const char*, const std::string*>{"out", &c.out},
                                   {"summary", &c.summary},
                                   {"ecdf", &c.ecdf},
                                   {"ecf", &c.ecf},
                                   {"table", &c.table}})
    if (!value->empty()) e.emplace_back(key, *value);
  return e;
}

[[nodiscard]] inline std::string serialize(const RunConfig& c) {
  std::string s;
  for (const auto& [k, v] : config_entries(c)) s += k + "=" + v + "\n";
  return s;
}

/// Thrown for --help; carries the text to print.
struct HelpRequested {
  std::string text;
};

/// Parses `args` (without the program name). `env_workers` is the value of
/// MPCLT_WORKERS, if set.
[[nodiscard]] inline RunConfig parse_config(const std::vector<std::string>& args,
                                            std::optional<std::string> env_workers = std::nullopt) {
  RunConfig c;
  std::string command, family = std::string(to_string(c.fhat.family));
  std::optional<int> workers;

  CLI::App app{"Monte Carlo and quadrature checks for linear statistics of the Mirzakhani-Petri process",
               "mpclt"};
  app.add_option("command", command, "probe | sample | cumulants | decay | clt | bounds")->required();
  app.add_option("--fhat", family, "test function family: triangular | smooth_bump");
  app.add_option("--beta", c.fhat.beta, "support half-width of fhat");
  app.add_option("--L", c.L, "window scale, or a comma-separated ladder")->delimiter(',');
  app.add_option("--tau", c.tau, "shift, or a comma-separated grid")->delimiter(',');
  app.add_option("--R", c.R, "realizations");
  app.add_option("--seed", c.seed, "master seed");
  app.add_option("--workers", workers, "worker threads (default: logical cores)");
  app.add_option("--tol", c.tol, "quadrature tolerance");
  app.add_option("--delta", c.delta, "small-x cutoff for Campbell integrals");
  app.add_option("--M", c.M, "highest cumulant order");
  app.add_option("--m", c.m, "cumulant order for decay");
  app.add_option("--x_min", c.x_min, "probe grid start");
  app.add_option("--x_max", c.x_max, "probe grid end (0: beta L)");
  app.add_option("--points", c.points, "probe grid size");
  app.add_option("--max_points", c.max_points, "guard on expected points per realization");
  app.add_option("--out", c.out, "primary output file");
  app.add_option("--summary", c.summary, "clt summary JSON");
  app.add_option("--ecdf", c.ecdf, "clt ECDF CSV (optional)");
  app.add_option("--ecf", c.ecf, "clt empirical characteristic function CSV (optional)");
  app.add_option("--table", c.table, "sample: intensity table CSV (optional)");
  app.set_config("--config", "", "flat key=value file; flags take precedence");
  app.allow_config_extras(CLI::config_extras_mode::error);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    throw HelpRequested{app.help()};
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    throw ConfigError(msg);
  }

  c.command = parse_command(command);
  c.fhat.family = parse_family(family);

  const bool workers_flag = std::any_of(args.begin(), args.end(), [](const std::string& a) {
    return a == "--workers" || a.rfind("--workers=", 0) == 0;
  });
  if (!workers_flag && env_workers && !env_workers->empty()) {
    try {
      std::size_t used = 0;
      workers = std::stoi(*env_workers, &used);
      if (used != env_workers->size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw ConfigError("MPCLT_WORKERS: '" + *env_workers + "' is not an integer");
    }
  }
  c.workers = workers.value_or(default_workers());

  if (c.out.empty()) c.out = default_output(c.command);
  if (c.command == Command::clt && c.summary.empty()) c.summary = "clt_summary.json";
  validate(c);
  return c;
}

}  // namespace mpclt
