#include "linresp/orbit.hpp"

#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>

#include "linresp/errors.hpp"

namespace linresp {

void OrbitConfig::check() const {
  if (N < 1) throw ConfigError("orbit: N must be >= 1");
  if (A < 1) throw ConfigError("orbit: A must be >= 1");
  if (W < 0) throw ConfigError("orbit: W must be >= 0");
  if (warmup_segments < 0)
    throw ConfigError("orbit: warmup_segments must be >= 0");
  if (spinup < 0) throw ConfigError("orbit: spinup must be >= 0");
  if (!std::isfinite(gamma)) throw ConfigError("orbit: gamma must be finite");
}

Orbit::Orbit(const OrbitConfig& cfg, int dim) : cfg_(cfg), dim_(dim) {
  cfg_.check();
  if (dim < 1) throw ConfigError("orbit: state dimension must be >= 1");
  states_.resize(static_cast<std::size_t>(hi_step() - lo_step() + 1));
  phis_.resize(states_.size());
  psis_.resize(static_cast<std::size_t>(psi_hi() - psi_lo() + 1));
  forcings_.resize(states_.size() - 1);
}

const Vec& Orbit::state(long m) const {
  if (m < lo_step() || m > hi_step())
    throw ConfigError("orbit: state index " + std::to_string(m) +
                      " outside [" + std::to_string(lo_step()) + ", " +
                      std::to_string(hi_step()) + "]");
  return states_[static_cast<std::size_t>(m - lo_step())];
}

double Orbit::phi(long m) const {
  if (m < lo_step() || m > hi_step())
    throw ConfigError("orbit: phi index " + std::to_string(m) +
                      " out of range");
  return phis_[static_cast<std::size_t>(m - lo_step())];
}

double Orbit::psi(long n) const {
  if (n < psi_lo() || n > psi_hi())
    throw ConfigError("orbit: psi index " + std::to_string(n) +
                      " outside [" + std::to_string(psi_lo()) + ", " +
                      std::to_string(psi_hi()) + "]");
  return psis_[static_cast<std::size_t>(n - psi_lo())];
}

const Vec& Orbit::forcing_into(long m) const {
  if (m < lo_step() + 1 || m > hi_step())
    throw ConfigError("orbit: forcing index " + std::to_string(m) +
                      " out of range");
  return forcings_[static_cast<std::size_t>(m - lo_step() - 1)];
}

Orbit generate_orbit(const MapSystem& sys, const Observable& obs,
                     const OrbitConfig& cfg) {
  check_system_shape(sys);
  Orbit orbit(cfg, sys.dim);

  Vec x = uniform_in_box(mix_seed(cfg.seed, 0x0b17), sys.init_lo, sys.init_hi);
  wrap_state(x, sys.periods);

  for (long k = 0; k < cfg.spinup; ++k) {
    x = sys.step(x, cfg.gamma);
    if (!x.allFinite())
      throw BlowupError("trajectory blew up during spin-up step " +
                            std::to_string(k) + " of " +
                            std::to_string(cfg.spinup),
                        k - cfg.spinup + orbit.lo_step());
  }

  // Fill states, phi and the parameter forcing along the stored range.
  const long lo = orbit.lo_step(), hi = orbit.hi_step();
  for (long m = lo; m <= hi; ++m) {
    if (m > lo) {
      const Vec& prev = orbit.states_[static_cast<std::size_t>(m - 1 - lo)];
      x = sys.step(prev, cfg.gamma);
      Vec fx = sys.param_vector(prev, cfg.gamma);
      if (!fx.allFinite())
        throw BlowupError(
            "parameter forcing became non-finite entering step " +
                std::to_string(m),
            m);
      orbit.forcings_[static_cast<std::size_t>(m - 1 - lo)] = std::move(fx);
    }
    if (!x.allFinite())
      throw BlowupError("trajectory blew up at step " + std::to_string(m), m);
    const double p = obs.value(x);
    if (!std::isfinite(p))
      throw BlowupError("observable became non-finite at step " +
                            std::to_string(m),
                        m);
    orbit.states_[static_cast<std::size_t>(m - lo)] = x;
    orbit.phis_[static_cast<std::size_t>(m - lo)] = p;
  }

  // Empirical mean over the core averaged steps [0, A*N).
  {
    KahanSum s;
    const long core = (long)cfg.A * cfg.N;
    for (long m = 0; m < core; ++m)
      s.add(orbit.phis_[static_cast<std::size_t>(m - lo)]);
    orbit.phi_mean_ = s.value() / static_cast<double>(core);
  }

  // Centered window sums by running update, re-anchored to a compensated
  // direct sum at every segment boundary (guards against drift).
  const double mean = orbit.phi_mean_;
  auto direct_psi = [&](long n) {
    KahanSum s;
    for (long m = n - cfg.W; m <= n + cfg.W; ++m)
      s.add(orbit.phis_[static_cast<std::size_t>(m - lo)] - mean);
    return s.value();
  };
  double running = 0.0;
  for (long n = orbit.psi_lo(); n <= orbit.psi_hi(); ++n) {
    if (n == orbit.psi_lo()) {
      running = direct_psi(n);
    } else {
      running += (orbit.phis_[static_cast<std::size_t>(n + cfg.W - lo)] - mean) -
                 (orbit.phis_[static_cast<std::size_t>(n - 1 - cfg.W - lo)] - mean);
      if (n % cfg.N == 0) {
        const double direct = direct_psi(n);
        if (std::abs(running - direct) > 1e-10 * (1.0 + std::abs(direct)))
          throw ConditioningError(
              "windowed observable sum drifted from its direct evaluation at "
              "step " +
              std::to_string(n));
        running = direct;
      }
    }
    orbit.psis_[static_cast<std::size_t>(n - orbit.psi_lo())] = running;
  }

  return orbit;
}

void dump_orbit_csv(const Orbit& orbit, std::ostream& os) {
  os << "step";
  for (int i = 0; i < orbit.dim(); ++i) os << ",x" << (i + 1);
  os << ",phi,psi\n";
  std::ostringstream row;
  row.precision(17);
  for (long m = orbit.lo_step(); m <= orbit.hi_step(); ++m) {
    row.str("");
    row << m;
    const Vec& x = orbit.state(m);
    for (int i = 0; i < orbit.dim(); ++i) row << "," << x[i];
    row << "," << orbit.phi(m) << ",";
    if (m >= orbit.psi_lo() && m <= orbit.psi_hi()) row << orbit.psi(m);
    os << row.str() << "\n";
  }
}

namespace {

void put_i64(std::ostream& os, std::int64_t v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(buf), 8);
}

std::int64_t get_i64(std::istream& is) {
  unsigned char buf[8];
  is.read(reinterpret_cast<char*>(buf), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return static_cast<std::int64_t>(v);
}

void put_f64(std::ostream& os, double d) {
  std::uint64_t v;
  std::memcpy(&v, &d, 8);
  put_i64(os, static_cast<std::int64_t>(v));
}

double get_f64(std::istream& is) {
  const std::uint64_t v = static_cast<std::uint64_t>(get_i64(is));
  double d;
  std::memcpy(&d, &v, 8);
  return d;
}

constexpr std::int64_t kOrbitMagic = 0x4c52504f52423031;  // "LRPORB01"

}  // namespace

void dump_orbit_binary(const Orbit& orbit, std::ostream& os) {
  const OrbitConfig& c = orbit.config();
  put_i64(os, kOrbitMagic);
  put_i64(os, orbit.dim());
  put_i64(os, c.N);
  put_i64(os, c.A);
  put_i64(os, c.W);
  put_i64(os, c.warmup_segments);
  put_i64(os, c.spinup);
  put_i64(os, static_cast<std::int64_t>(c.seed));
  put_f64(os, c.gamma);
  put_f64(os, orbit.phi_mean());
  for (long m = orbit.lo_step(); m <= orbit.hi_step(); ++m) {
    const Vec& x = orbit.state(m);
    for (int i = 0; i < orbit.dim(); ++i) put_f64(os, x[i]);
    put_f64(os, orbit.phi(m));
  }
  for (long n = orbit.psi_lo(); n <= orbit.psi_hi(); ++n)
    put_f64(os, orbit.psi(n));
  for (long m = orbit.lo_step() + 1; m <= orbit.hi_step(); ++m) {
    const Vec& f = orbit.forcing_into(m);
    for (int i = 0; i < orbit.dim(); ++i) put_f64(os, f[i]);
  }
}

Orbit load_orbit_binary(std::istream& is) {
  if (get_i64(is) != kOrbitMagic)
    throw ConfigError("orbit load: bad magic (not an orbit dump)");
  const int dim = static_cast<int>(get_i64(is));
  OrbitConfig c;
  c.N = static_cast<int>(get_i64(is));
  c.A = static_cast<int>(get_i64(is));
  c.W = static_cast<int>(get_i64(is));
  c.warmup_segments = static_cast<int>(get_i64(is));
  c.spinup = get_i64(is);
  c.seed = static_cast<std::uint64_t>(get_i64(is));
  c.gamma = get_f64(is);
  Orbit orbit(c, dim);
  orbit.phi_mean_ = get_f64(is);
  for (std::size_t k = 0; k < orbit.states_.size(); ++k) {
    Vec x(dim);
    for (int i = 0; i < dim; ++i) x[i] = get_f64(is);
    orbit.states_[k] = std::move(x);
    orbit.phis_[k] = get_f64(is);
  }
  for (std::size_t k = 0; k < orbit.psis_.size(); ++k)
    orbit.psis_[k] = get_f64(is);
  for (std::size_t k = 0; k < orbit.forcings_.size(); ++k) {
    Vec f(dim);
    for (int i = 0; i < dim; ++i) f[i] = get_f64(is);
    orbit.forcings_[k] = std::move(f);
  }
  if (!is) throw ConfigError("orbit load: truncated stream");
  return orbit;
}

}  // namespace linresp
