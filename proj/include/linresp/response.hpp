#pragma once

#include <string>

#include "linresp/curvature.hpp"

namespace linresp {

struct ResponseConfig {
  OrbitConfig orbit;
  // Number of tracked unstable directions; < 0 means use the system's
  // declared unstable_dim.
  int unstable_override = -1;
  // Leading segments whose trace terms are dropped from the unstable
  // average (the second-order state still sweeps through them).
  int discard_segments = 0;
  SolverKind solver = SolverKind::Auto;
  // Run the finite-difference callback check before the pipeline; a flagged
  // callback is a hard error.
  bool validate = true;
  int validate_probes = 16;

  int resolved_unstable(const MapSystem& sys) const;
};

// Everything one run produces.  derivative = shadowing - unstable holds
// exactly (same floating-point values, not a re-computation).
struct ResponseReport {
  std::string map_name;
  std::string observable_name;
  int unstable_dim = 0;

  double derivative = 0.0;
  double shadowing = 0.0;   // time average of grad(phi) . v
  double unstable = 0.0;    // windowed unstable contribution
  double phi_mean = 0.0;    // empirical mean of the observable

  std::vector<double> lyapunov;       // per tracked direction
  std::vector<double> trace_terms;    // per segment
  std::vector<double> vmax;           // per segment, max ||v||
  double constraint_residual = 0.0;   // worse of the two solves
  double stationarity_residual = 0.0;
  double max_start_projection = 0.0;  // second-order orthogonality check

  ResponseConfig config;  // effective configuration echo
  double wall_seconds = 0.0;  // timing; excluded from the deterministic data
};

// Full pipeline: orbit -> first-order sweep -> both constrained solves ->
// shadowing contribution -> second-order sweep -> derivative.
ResponseReport compute_response(const MapSystem& sys, const Observable& obs,
                                const ResponseConfig& cfg);

// `reps` independent runs with seeds mix_seed(cfg.orbit.seed, rep), executed
// on a worker pool (`threads` <= 0 means the LINRESP_THREADS environment
// variable, falling back to the hardware concurrency).  A replica that
// throws is reported in `errors` without aborting the others; mean/std are
// over the successful replicas' derivatives.
struct ReplicaSet {
  std::vector<ResponseReport> reports;  // indexed by replica; failed = empty
  std::vector<std::string> errors;      // empty string = success
  std::vector<std::uint64_t> seeds;
  double derivative_mean = 0.0;
  double derivative_std = 0.0;
  int failures = 0;
};
ReplicaSet replicate(const MapSystem& sys, const Observable& obs,
                     const ResponseConfig& cfg, int reps, int threads = 0);

// JSON with two top-level objects: "data" (deterministic for a fixed config,
// seed, and build) and "meta" (timing).  Doubles are serialized with
// shortest round-trip formatting, so equal runs give byte-equal "data".
std::string report_to_json(const ResponseReport& rep);
std::string replica_set_to_json(const ReplicaSet& set);

// Worker count resolution used by every parallel driver.
int resolve_threads(int requested, int jobs);

}  // namespace linresp
