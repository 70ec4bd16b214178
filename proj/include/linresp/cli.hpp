#pragma once

#include <string>

#include "linresp/maps.hpp"
#include "linresp/oracle.hpp"
#include "linresp/response.hpp"

namespace linresp {

// Process exit codes, one per failure class.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;       // unexpected error
inline constexpr int kExitConfig = 2;        // bad flag/key/value, failed validation
inline constexpr int kExitBlowup = 3;        // trajectory left the finite range
inline constexpr int kExitConditioning = 4;  // rank loss / residuals over tolerance

// Effective configuration of one CLI invocation.  Values come from defaults,
// then an optional flat key=value config file, then command-line flags (each
// layer overriding the previous); unknown file keys are hard errors.
struct RunConfig {
  std::string map = "solenoid";
  ResponseConfig response;
  int reps = 1;
  int threads = 0;   // <= 0: LINRESP_THREADS env var, then hardware
  int probes = 32;   // validation probe count for the validate command
  std::string out;   // output path; empty = stdout
  std::string csv;   // per-replica CSV path; empty = derive from `out`

  std::vector<long> a_list = {125, 250, 500, 1000, 2000};
  std::vector<int> w_list = {2, 5, 10, 20, 40};
  std::vector<double> gamma_list;  // grid for the gamma-sweep command

  FdOracleConfig oracle;  // empty grid = derived around response.orbit.gamma
};

// Canonical `key=value` serialization of the effective config (sorted keys,
// full precision) and its FNV-1a hash; the hash is stamped into every CSV.
std::string canonical_config(const RunConfig& cfg, const std::string& command);
std::uint64_t config_hash(const RunConfig& cfg, const std::string& command);

// Study drivers, exposed for tests.  Each point runs `reps` replicas with
// seeds derived from the base seed and the varied value.
struct ScalingPoint {
  double value = 0.0;  // the varied quantity (A or W)
  double mean = 0.0;   // mean derivative over replicas
  double std = 0.0;    // sample std over replicas
};
struct ScalingResult {
  std::vector<ScalingPoint> points;
  double std_loglog_slope = 0.0;  // slope of log(std) against log(value)
};
ScalingResult scaling_in_segments(const NamedSystem& ns, const RunConfig& cfg);
ScalingResult scaling_in_window(const NamedSystem& ns, const RunConfig& cfg);

// One row of the gamma-sweep data product: the method's derivative next to a
// local finite-difference slope through the neighboring grid means.
struct GammaSweepRow {
  double gamma = 0.0;
  double fd_mean = 0.0;  // stationary average from the plain runs
  double fd_se = 0.0;
  double derivative_mean = 0.0;
  double derivative_std = 0.0;
  double fd_local_slope = 0.0;
  double fd_local_slope_stderr = 0.0;
};
std::vector<GammaSweepRow> gamma_sweep(const NamedSystem& ns,
                                       const RunConfig& cfg);

// Oracle grid used when none is configured: 9 points spanning +-40% of
// gamma (+-0.04 when gamma is 0).
std::vector<double> default_oracle_grid(double gamma);

// Full command-line driver (commands: run, scaling-a, scaling-w,
// gamma-sweep, validate, oracle).  Returns one of the exit codes above.
int run_cli(int argc, const char* const* argv);

}  // namespace linresp
