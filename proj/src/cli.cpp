#include "linresp/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "linresp/errors.hpp"

namespace linresp {

namespace {

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Empty field for non-finite values (dropped grid points, failed replicas).
std::string csv_field(double v) { return std::isfinite(v) ? fmt_g(v) : ""; }

template <typename T>
std::vector<T> split_list(const std::string& s, const char* what) {
  std::vector<T> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    try {
      std::size_t pos = 0;
      const double v = std::stod(tok, &pos);
      if (pos != tok.size()) throw std::invalid_argument(tok);
      out.push_back(static_cast<T>(v));
      if (static_cast<double>(out.back()) != v)
        throw std::invalid_argument(tok);  // non-integral where integral needed
    } catch (const std::exception&) {
      throw ConfigError(std::string(what) + ": cannot parse list entry '" +
                        tok + "'");
    }
  }
  if (out.empty())
    throw ConfigError(std::string(what) + ": empty list");
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open output file '" + path + "'");
  os << text;
  if (!os) throw ConfigError("failed writing output file '" + path + "'");
}

std::string join_list(const std::vector<double>& v) {
  std::string s;
  for (double x : v) {
    if (!s.empty()) s += ",";
    s += fmt_g(x);
  }
  return s;
}
std::string join_list(const std::vector<long>& v) {
  std::string s;
  for (long x : v) {
    if (!s.empty()) s += ",";
    s += std::to_string(x);
  }
  return s;
}
std::string join_list(const std::vector<int>& v) {
  std::string s;
  for (int x : v) {
    if (!s.empty()) s += ",";
    s += std::to_string(x);
  }
  return s;
}

const char* solver_name(SolverKind s) {
  switch (s) {
    case SolverKind::Banded: return "banded";
    case SolverKind::Dense: return "dense";
    default: return "auto";
  }
}

SolverKind parse_solver(const std::string& s) {
  if (s == "auto") return SolverKind::Auto;
  if (s == "banded") return SolverKind::Banded;
  if (s == "dense") return SolverKind::Dense;
  throw ConfigError("solver must be one of auto, banded, dense (got '" + s +
                    "')");
}

std::string hash_comment(const RunConfig& cfg, const std::string& command) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "# config_hash=%016llx command=%s\n",
                static_cast<unsigned long long>(config_hash(cfg, command)),
                command.c_str());
  return buf;
}

}  // namespace

std::string canonical_config(const RunConfig& cfg, const std::string& command) {
  const OrbitConfig& o = cfg.response.orbit;
  std::vector<std::string> lines = {
      "A=" + std::to_string(o.A),
      "N=" + std::to_string(o.N),
      "W=" + std::to_string(o.W),
      "a_list=" + join_list(cfg.a_list),
      "command=" + command,
      "discard_segments=" + std::to_string(cfg.response.discard_segments),
      "gamma=" + fmt_g(o.gamma),
      "gammas=" + join_list(cfg.gamma_list),
      "map=" + cfg.map,
      "oracle_gammas=" + join_list(cfg.oracle.gamma_grid),
      "oracle_runs=" + std::to_string(cfg.oracle.runs_per_gamma),
      "oracle_spinup=" + std::to_string(cfg.oracle.spinup),
      "oracle_steps=" + std::to_string(cfg.oracle.steps_per_run),
      "oracle_weighted=" + std::string(cfg.oracle.weighted ? "true" : "false"),
      "probes=" + std::to_string(cfg.probes),
      "reps=" + std::to_string(cfg.reps),
      "seed=" + std::to_string(o.seed),
      "solver=" + std::string(solver_name(cfg.response.solver)),
      "spinup=" + std::to_string(o.spinup),
      "u=" + std::to_string(cfg.response.unstable_override),
      "validate=" + std::string(cfg.response.validate ? "true" : "false"),
      "w_list=" + join_list(cfg.w_list),
      "warmup_segments=" + std::to_string(o.warmup_segments),
  };
  std::sort(lines.begin(), lines.end());
  std::string out;
  for (const auto& l : lines) {
    out += l;
    out += "\n";
  }
  return out;
}

std::uint64_t config_hash(const RunConfig& cfg, const std::string& command) {
  return fnv1a64(canonical_config(cfg, command));
}

std::vector<double> default_oracle_grid(double gamma) {
  const double half = gamma != 0.0 ? 0.4 * std::abs(gamma) : 0.04;
  std::vector<double> grid;
  for (int k = -4; k <= 4; ++k)
    grid.push_back(gamma + half * static_cast<double>(k) / 4.0);
  return grid;
}

namespace {

// Replicated runs at one study point, with the point's value folded into the
// seed so different points use independent orbits.
ReplicaSet replicate_at(const NamedSystem& ns, const RunConfig& cfg,
                        std::uint64_t salt, long value,
                        const ResponseConfig& response) {
  ResponseConfig local = response;
  local.orbit.seed = mix_seed(mix_seed(cfg.response.orbit.seed, salt),
                              static_cast<std::uint64_t>(value));
  return replicate(ns.system, ns.observable, local, cfg.reps, cfg.threads);
}

ScalingResult scaling_study(const NamedSystem& ns, const RunConfig& cfg,
                            bool vary_segments) {
  if (cfg.reps < 2)
    throw ConfigError("scaling studies need reps >= 2 to estimate a spread");
  ScalingResult res;
  std::vector<double> lx, ly;
  const auto values = vary_segments
                          ? cfg.a_list
                          : std::vector<long>(cfg.w_list.begin(),
                                              cfg.w_list.end());
  for (long v : values) {
    ResponseConfig rc = cfg.response;
    if (vary_segments)
      rc.orbit.A = static_cast<int>(v);
    else
      rc.orbit.W = static_cast<int>(v);
    const ReplicaSet set =
        replicate_at(ns, cfg, vary_segments ? 0x5e65 : 0x3317d0, v, rc);
    ScalingPoint pt;
    pt.value = static_cast<double>(v);
    pt.mean = set.derivative_mean;
    pt.std = set.derivative_std;
    res.points.push_back(pt);
    if (pt.std > 0) {
      lx.push_back(std::log(pt.value));
      ly.push_back(std::log(pt.std));
    }
  }
  if (lx.size() >= 2) res.std_loglog_slope = fit_line(lx, ly).slope;
  return res;
}

}  // namespace

ScalingResult scaling_in_segments(const NamedSystem& ns, const RunConfig& cfg) {
  return scaling_study(ns, cfg, true);
}

ScalingResult scaling_in_window(const NamedSystem& ns, const RunConfig& cfg) {
  return scaling_study(ns, cfg, false);
}

std::vector<GammaSweepRow> gamma_sweep(const NamedSystem& ns,
                                       const RunConfig& cfg) {
  if (cfg.gamma_list.size() < 3)
    throw ConfigError(
        "gamma-sweep needs at least 3 grid values (for local slopes)");

  // Plain long runs on the sweep grid give the stationary means the local
  // slopes are fitted through.
  FdOracleConfig oc = cfg.oracle;
  oc.gamma_grid = cfg.gamma_list;
  oc.seed = mix_seed(cfg.response.orbit.seed, 0x0eac1e);
  oc.threads = cfg.threads;
  const FdRegression reg = fd_regression(ns.system, ns.observable, oc);

  const int G = static_cast<int>(cfg.gamma_list.size());
  std::vector<GammaSweepRow> rows(static_cast<std::size_t>(G));
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (int i = 0; i < G; ++i) {
    GammaSweepRow& row = rows[static_cast<std::size_t>(i)];
    const FdGridPoint& pt = reg.points[static_cast<std::size_t>(i)];
    row.gamma = pt.gamma;
    row.fd_mean = pt.ok ? pt.mean : nan;
    row.fd_se = pt.ok ? pt.se : nan;

    ResponseConfig rc = cfg.response;
    rc.orbit.gamma = pt.gamma;
    try {
      const ReplicaSet set = replicate_at(ns, cfg, 0x99a3, i, rc);
      row.derivative_mean = set.derivative_mean;
      row.derivative_std = set.derivative_std;
    } catch (const BlowupError&) {
      row.derivative_mean = nan;
      row.derivative_std = nan;
    }

    // Local least-squares slope through the surviving neighbors.
    std::vector<double> xs, ys;
    for (int j = std::max(0, i - 2); j <= std::min(G - 1, i + 2); ++j) {
      const FdGridPoint& q = reg.points[static_cast<std::size_t>(j)];
      if (q.ok) {
        xs.push_back(q.gamma);
        ys.push_back(q.mean);
      }
    }
    if (xs.size() >= 3) {
      const LineFit fit = fit_line(xs, ys);
      row.fd_local_slope = fit.slope;
      row.fd_local_slope_stderr = fit.slope_stderr;
    } else {
      row.fd_local_slope = nan;
      row.fd_local_slope_stderr = nan;
    }
  }
  return rows;
}

namespace {

std::string replica_csv(const RunConfig& cfg, const ReplicaSet& set) {
  std::string csv = hash_comment(cfg, "run");
  csv += "rep,seed,shadowing,unstable,derivative\n";
  for (std::size_t i = 0; i < set.reports.size(); ++i) {
    csv += std::to_string(i) + "," + std::to_string(set.seeds[i]) + ",";
    if (set.errors[i].empty()) {
      const ResponseReport& r = set.reports[i];
      csv += fmt_g(r.shadowing) + "," + fmt_g(r.unstable) + "," +
             fmt_g(r.derivative);
    } else {
      csv += ",,";
    }
    csv += "\n";
  }
  return csv;
}

int cmd_run(const RunConfig& cfg) {
  const NamedSystem ns = make_named_system(cfg.map);
  if (cfg.reps == 1) {
    const ResponseReport rep =
        compute_response(ns.system, ns.observable, cfg.response);
    write_text(cfg.out, report_to_json(rep) + "\n");
    return kExitOk;
  }
  const ReplicaSet set =
      replicate(ns.system, ns.observable, cfg.response, cfg.reps, cfg.threads);
  write_text(cfg.out, replica_set_to_json(set) + "\n");
  const std::string csv = replica_csv(cfg, set);
  std::string csv_path = cfg.csv;
  if (csv_path.empty() && !cfg.out.empty()) csv_path = cfg.out + ".replicas.csv";
  write_text(csv_path, csv);
  return kExitOk;
}

int cmd_scaling(const RunConfig& cfg, bool vary_segments) {
  const NamedSystem ns = make_named_system(cfg.map);
  const ScalingResult res = vary_segments ? scaling_in_segments(ns, cfg)
                                          : scaling_in_window(ns, cfg);
  std::string csv =
      hash_comment(cfg, vary_segments ? "scaling-a" : "scaling-w");
  csv += std::string(vary_segments ? "A" : "W") +
         ",derivative_mean,derivative_std\n";
  for (const auto& pt : res.points)
    csv += fmt_g(pt.value) + "," + fmt_g(pt.mean) + "," + fmt_g(pt.std) + "\n";
  csv += "# std_loglog_slope=" + fmt_g(res.std_loglog_slope) + "\n";
  write_text(cfg.out, csv);
  return kExitOk;
}

int cmd_gamma_sweep(const RunConfig& cfg) {
  const NamedSystem ns = make_named_system(cfg.map);
  const auto rows = gamma_sweep(ns, cfg);
  std::string csv = hash_comment(cfg, "gamma-sweep");
  csv +=
      "gamma,fd_mean,fd_se,derivative_mean,derivative_std,fd_local_slope,"
      "fd_local_slope_stderr\n";
  for (const auto& r : rows) {
    csv += fmt_g(r.gamma) + "," + csv_field(r.fd_mean) + "," +
           csv_field(r.fd_se) + "," + csv_field(r.derivative_mean) + "," +
           csv_field(r.derivative_std) + "," + csv_field(r.fd_local_slope) +
           "," + csv_field(r.fd_local_slope_stderr) + "\n";
  }
  write_text(cfg.out, csv);
  return kExitOk;
}

int cmd_validate(const RunConfig& cfg) {
  const NamedSystem ns = make_named_system(cfg.map);
  const ValidationReport rep =
      validate_system(ns.system, ns.observable, cfg.response.orbit.gamma,
                      cfg.probes, cfg.response.orbit.seed);
  std::string text = rep.summary();
  text += rep.ok() ? "all callbacks consistent\n"
                   : "callback inconsistency detected\n";
  write_text(cfg.out, text);
  return rep.ok() ? kExitOk : kExitConfig;
}

int cmd_oracle(const RunConfig& cfg) {
  const NamedSystem ns = make_named_system(cfg.map);
  FdOracleConfig oc = cfg.oracle;
  if (oc.gamma_grid.empty())
    oc.gamma_grid = default_oracle_grid(cfg.response.orbit.gamma);
  oc.seed = mix_seed(cfg.response.orbit.seed, 0x0eac1e);
  oc.threads = cfg.threads;
  const FdRegression reg = fd_regression(ns.system, ns.observable, oc);

  RunConfig echo = cfg;
  echo.oracle = oc;
  std::string csv = hash_comment(echo, "oracle");
  csv += "gamma,mean,se,runs_ok,ok\n";
  for (const auto& pt : reg.points)
    csv += fmt_g(pt.gamma) + "," + csv_field(pt.ok ? pt.mean : NAN) + "," +
           csv_field(pt.ok ? pt.se : NAN) + "," + std::to_string(pt.runs_ok) +
           "," + (pt.ok ? "1" : "0") + "\n";
  csv += "# slope=" + fmt_g(reg.slope) + "\n";
  csv += "# slope_stderr=" + fmt_g(reg.slope_stderr) + "\n";
  csv += "# intercept=" + fmt_g(reg.intercept) + "\n";
  write_text(cfg.out, csv);
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  RunConfig cfg;
  std::string solver = "auto";
  std::string a_list_s, w_list_s, gammas_s, oracle_gammas_s;

  CLI::App app{
      "linresp: derivatives of long-time averages of chaotic maps with "
      "respect to a parameter, via shadowing plus an unstable-divergence "
      "correction"};
  app.set_config("--config", "",
                 "flat key=value config file (CLI flags take precedence; "
                 "unknown keys are errors)")
      ->configurable(false);
  app.allow_config_extras(CLI::config_extras_mode::error);

  app.add_option("--map", cfg.map,
                 "system name: solenoid, contracting_affine, expanding_circle");
  app.add_option("--gamma", cfg.response.orbit.gamma, "map parameter");
  app.add_option("--N", cfg.response.orbit.N, "steps per segment");
  app.add_option("--A", cfg.response.orbit.A, "number of segments");
  app.add_option("--W", cfg.response.orbit.W, "window half-width");
  app.add_option("--spinup", cfg.response.orbit.spinup,
                 "discarded leading steps");
  app.add_option("--warmup-segments,--warmup_segments",
                 cfg.response.orbit.warmup_segments,
                 "leading tangent segments discarded before averaging");
  app.add_option("--seed", cfg.response.orbit.seed,
                 "base seed; reruns with the same config and seed are "
                 "bit-identical");
  app.add_option("--u", cfg.response.unstable_override,
                 "tracked unstable directions (-1 = map default)");
  app.add_option("--discard-segments,--discard_segments",
                 cfg.response.discard_segments,
                 "leading trace terms dropped from the unstable average");
  app.add_option("--solver", solver, "constrained solver: auto|banded|dense");
  app.add_flag("--validate,!--no-validate", cfg.response.validate,
               "check callbacks against finite differences before running");
  app.add_option("--reps", cfg.reps, "independent replicas");
  app.add_option("--threads", cfg.threads, "worker threads (0 = auto)")
      ->envname("LINRESP_THREADS");
  app.add_option("--probes", cfg.probes,
                 "probe count for the validate command");
  app.add_option("--out", cfg.out, "output path (default stdout)");
  app.add_option("--csv", cfg.csv, "per-replica CSV path (run command)");
  app.add_option("--a-list,--a_list", a_list_s,
                 "comma-separated A values for scaling-a");
  app.add_option("--w-list,--w_list", w_list_s,
                 "comma-separated W values for scaling-w");
  app.add_option("--gammas", gammas_s,
                 "comma-separated gamma grid for gamma-sweep");
  app.add_option("--oracle-gammas,--oracle_gammas", oracle_gammas_s,
                 "comma-separated gamma grid for the oracle");
  app.add_option("--oracle-steps,--oracle_steps", cfg.oracle.steps_per_run,
                 "steps per oracle run");
  app.add_option("--oracle-runs,--oracle_runs", cfg.oracle.runs_per_gamma,
                 "runs per oracle grid point");
  app.add_option("--oracle-spinup,--oracle_spinup", cfg.oracle.spinup,
                 "discarded leading steps per oracle run");
  app.add_flag("--oracle-weighted,--oracle_weighted", cfg.oracle.weighted,
               "weight the oracle fit by inverse variances");

  // Options live on the parent app; subcommands only select the command, so
  // let unmatched options fall back through to the parent.
  const std::pair<const char*, const char*> commands[] = {
      {"run", "one response computation (or --reps replicas)"},
      {"scaling-a", "replica spread against the number of segments A"},
      {"scaling-w", "replica spread against the window half-width W"},
      {"gamma-sweep",
       "method derivative next to local finite-difference slopes across a "
       "gamma grid"},
      {"validate", "check map callbacks against finite differences"},
      {"oracle", "finite-difference reference slope on a gamma grid"}};
  for (const auto& [name, desc] : commands)
    app.add_subcommand(name, desc)->fallthrough();
  app.require_subcommand(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    cfg.response.solver = parse_solver(solver);
    if (!a_list_s.empty()) cfg.a_list = split_list<long>(a_list_s, "a_list");
    if (!w_list_s.empty()) cfg.w_list = split_list<int>(w_list_s, "w_list");
    if (!gammas_s.empty())
      cfg.gamma_list = split_list<double>(gammas_s, "gammas");
    if (!oracle_gammas_s.empty())
      cfg.oracle.gamma_grid =
          split_list<double>(oracle_gammas_s, "oracle_gammas");

    if (app.got_subcommand("run")) return cmd_run(cfg);
    if (app.got_subcommand("scaling-a")) return cmd_scaling(cfg, true);
    if (app.got_subcommand("scaling-w")) return cmd_scaling(cfg, false);
    if (app.got_subcommand("gamma-sweep")) return cmd_gamma_sweep(cfg);
    if (app.got_subcommand("validate")) return cmd_validate(cfg);
    if (app.got_subcommand("oracle")) return cmd_oracle(cfg);
    throw ConfigError("no command given");
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const BlowupError& e) {
    std::cerr << "blow-up: " << e.what() << "\n";
    return kExitBlowup;
  } catch (const ConditioningError& e) {
    std::cerr << "conditioning failure: " << e.what() << "\n";
    return kExitConditioning;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace linresp
