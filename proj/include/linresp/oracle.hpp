#pragma once

#include <cstdint>

#include "linresp/model.hpp"

namespace linresp {

// Configuration for the finite-difference reference: independent long runs
// of the plain map on a parameter grid, followed by a least-squares line
// through the per-grid-point means.  The fitted slope estimates the
// derivative of the stationary average at the grid center, with a standard
// error from the regression residuals.
struct FdOracleConfig {
  std::vector<double> gamma_grid;  // >= 3 sorted distinct values
  long steps_per_run = 20000;
  int runs_per_gamma = 4;
  long spinup = 1000;
  std::uint64_t seed = 0;
  // Weight grid points by the inverse variance of their run means.
  bool weighted = false;
  int threads = 0;

  void check() const;
};

struct FdGridPoint {
  double gamma = 0.0;
  double mean = 0.0;      // mean of the per-run averages
  double se = 0.0;        // standard error of that mean across runs
  int runs_ok = 0;
  bool ok = false;        // false = dropped (a run blew up)
};

struct FdRegression {
  double slope = 0.0;
  double slope_stderr = 0.0;
  double intercept = 0.0;
  std::vector<FdGridPoint> points;  // one per grid value, in grid order
};

// Run the grid (parallel over (gamma, run) tasks, each with a seed derived
// from the base seed so any single run is reproducible), drop grid points
// with blown-up runs, and fit the line.  Throws ConditioningError if fewer
// than 3 grid points survive.
FdRegression fd_regression(const MapSystem& sys, const Observable& obs,
                           const FdOracleConfig& cfg);

// Mean of the observable over one run: seeded start in the system's initial
// box, `spinup` discarded steps, then `steps` averaged steps.  Throws
// BlowupError as soon as a state or value goes non-finite.
double long_run_mean(const MapSystem& sys, const Observable& obs, double gamma,
                     long spinup, long steps, std::uint64_t seed);

}  // namespace linresp
