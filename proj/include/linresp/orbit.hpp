#pragma once

#include <cstdint>
#include <iosfwd>

#include "linresp/model.hpp"

namespace linresp {

// Geometry and reproducibility knobs for one trajectory.
struct OrbitConfig {
  int N = 20;    // steps per segment
  int A = 1000;  // number of averaged segments
  int W = 10;    // window half-width of the centered observable sum
  // Extra leading segments used to settle the inhomogeneous tangent
  // solutions before averaging starts; their records are discarded.
  int warmup_segments = 1;
  long spinup = 1000;  // steps discarded before anything is stored
  std::uint64_t seed = 0;
  double gamma = 0.1;

  void check() const;  // throws ConfigError on out-of-range values
};

// One stored trajectory with the derived per-step quantities the tangent
// sweeps consume.
//
// Step indexing is global: step 0 is the first averaged step, segment alpha
// covers steps [alpha*N, (alpha+1)*N], and warmup segments sit at negative
// indices.  Stored states cover [lo_step(), hi_step()] with
//   lo_step() = -(W + warmup_segments*N),   hi_step() = A*N + W.
// The centered window sum
//   psi(n) = sum_{|m - n| <= W} (phi(m) - phi_mean)
// is defined for n in [-warmup_segments*N, A*N]; phi_mean is the plain
// empirical mean of phi over the core steps [0, A*N).
class Orbit {
 public:
  Orbit(const OrbitConfig& cfg, int dim);

  const OrbitConfig& config() const { return cfg_; }
  int dim() const { return dim_; }
  long lo_step() const { return -(long)cfg_.W - (long)cfg_.warmup_segments * cfg_.N; }
  long hi_step() const { return (long)cfg_.A * cfg_.N + cfg_.W; }
  long psi_lo() const { return -(long)cfg_.warmup_segments * cfg_.N; }
  long psi_hi() const { return (long)cfg_.A * cfg_.N; }

  const Vec& state(long m) const;
  double phi(long m) const;
  double psi(long n) const;
  // d f / d gamma evaluated on the step into m, i.e. param_vector(x_{m-1});
  // defined for m in [lo_step()+1, hi_step()].
  const Vec& forcing_into(long m) const;
  double phi_mean() const { return phi_mean_; }

 private:
  OrbitConfig cfg_;
  int dim_;
  double phi_mean_ = 0.0;
  std::vector<Vec> states_;   // index m - lo_step()
  std::vector<double> phis_;  // same indexing
  std::vector<double> psis_;  // index n - psi_lo()
  std::vector<Vec> forcings_; // index m - (lo_step() + 1)

  friend Orbit generate_orbit(const MapSystem&, const Observable&,
                              const OrbitConfig&);
  friend Orbit load_orbit_binary(std::istream&);
};

// Run the map from a seeded random initial state: `spinup` discarded steps,
// then the stored range.  Fills phi, phi_mean, the centered window sums psi
// (running-window update, re-anchored against a compensated direct sum at
// every segment boundary), and the per-step parameter forcing.  Throws
// BlowupError (naming the step) if any state, observable value, or forcing
// goes non-finite.
Orbit generate_orbit(const MapSystem& sys, const Observable& obs,
                     const OrbitConfig& cfg);

// Debug dumps.  CSV has one row per stored step: step, x0..x{M-1}, phi, psi
// (psi empty outside its range).  The binary format is a small header of
// int64 fields followed by the same columns as little-endian float64 and
// round-trips through load_orbit_binary.
void dump_orbit_csv(const Orbit& orbit, std::ostream& os);
void dump_orbit_binary(const Orbit& orbit, std::ostream& os);
Orbit load_orbit_binary(std::istream& is);

}  // namespace linresp
