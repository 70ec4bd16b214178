#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "linresp/numerics.hpp"

namespace linresp {

// A parametrized discrete-time map x_{n+1} = f(x_n; gamma) together with the
// analytic derivative callbacks the response pipeline consumes.
//
// Conventions:
//  * States live in the fundamental domain: coordinates with periods[i] > 0
//    are wrapped into [0, periods[i]) by `step`; periods[i] <= 0 marks an
//    unbounded coordinate.
//  * Tangent vectors live in the flat covering space and are never wrapped.
//    All derivative callbacks must be wrap-independent (shifting a periodic
//    coordinate of x by its period must not change their values).
//  * Callbacks must be pure (no shared mutable state); the pipeline may
//    evaluate them concurrently from worker threads.
struct MapSystem {
  std::string name;
  int dim = 0;           // state dimension M
  int unstable_dim = 0;  // number of expanding directions u
  std::vector<double> periods;  // per coordinate; <= 0 means unbounded
  Vec init_lo, init_hi;         // box from which initial states are drawn

  // f(x; gamma), wrapped into the fundamental domain.
  std::function<Vec(const Vec& x, double gamma)> step;
  // w -> (Df)(x) w, the state derivative applied to a tangent vector.
  // Must be linear in w.
  std::function<Vec(const Vec& x, double gamma, const Vec& w)> jacobian_vector;
  // (y, w) -> (D^2 f)(x)[y, w], the second state derivative.  Must be
  // bilinear and symmetric in (y, w).
  std::function<Vec(const Vec& x, double gamma, const Vec& y, const Vec& w)>
      hessian_vector_vector;
  // (d f / d gamma)(x; gamma): the parameter derivative, a tangent vector
  // attached at f(x).
  std::function<Vec(const Vec& x, double gamma)> param_vector;
  // w -> D_x (d f / d gamma)(x) w, the mixed second derivative applied to w.
  std::function<Vec(const Vec& x, double gamma, const Vec& w)>
      param_vector_jacobian;
};

// Scalar observable with analytic gradient.
struct Observable {
  std::string name;
  std::function<double(const Vec& x)> value;
  std::function<Vec(const Vec& x)> gradient;
};

// Worst relative finite-difference discrepancy seen per callback over a
// batch of random probe points and directions.  Central differences with
// step 1e-6; discrepancies are relative to max(1, |exact|, |fd|), so an
// analytically zero derivative checks out exactly.  Entries above
// `tolerance` (default 1e-4) mark the callback as inconsistent.
struct ValidationReport {
  double jacobian_vector = 0.0;
  double hessian_vector_vector = 0.0;
  double param_vector = 0.0;
  double param_vector_jacobian = 0.0;
  double observable_gradient = 0.0;
  double tolerance = 1e-4;
  int probes = 0;

  bool ok() const;
  double worst() const;
  // One line per callback: name, max relative discrepancy, PASS/FLAG.
  std::string summary() const;
};

// Probe every derivative callback of `sys` (and the gradient of `obs`)
// against central finite differences of the callback one level below it at
// `probes` random states drawn from the system's initial box, pushed through
// a few map steps so probes land near the attractor.  Throws ConfigError on
// dimension mismatches and BlowupError on non-finite callback output.
ValidationReport validate_system(const MapSystem& sys, const Observable& obs,
                                 double gamma, int probes = 32,
                                 std::uint64_t seed = 0);

// Throws ConfigError unless the system's static fields are coherent
// (dim >= 1, 0 <= unstable_dim <= dim, box and period sizes match dim, all
// five callbacks present).
void check_system_shape(const MapSystem& sys);

}  // namespace linresp
