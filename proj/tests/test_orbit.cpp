#include <cmath>
#include <sstream>

#include "doctest.h"
#include "linresp/errors.hpp"
#include "linresp/maps.hpp"
#include "linresp/numerics.hpp"
#include "linresp/orbit.hpp"

namespace {

using linresp::Vec;

linresp::OrbitConfig small_config() {
  linresp::OrbitConfig cfg;
  cfg.N = 10;
  cfg.A = 30;
  cfg.W = 7;
  cfg.warmup_segments = 1;
  cfg.spinup = 200;
  cfg.seed = 5;
  cfg.gamma = 0.1;
  return cfg;
}

// 1-D map that multiplies by ten each step; overflows double within a few
// hundred iterations, so trajectories must be reported as blown up.
linresp::MapSystem diverging_map() {
  linresp::MapSystem sys;
  sys.name = "diverging";
  sys.dim = 1;
  sys.unstable_dim = 1;
  sys.periods = {0.0};
  sys.init_lo = Vec::Ones(1);
  sys.init_hi = Vec::Constant(1, 2.0);
  sys.step = [](const Vec& x, double) { return (10.0 * x).eval(); };
  sys.jacobian_vector = [](const Vec&, double, const Vec& w) {
    return (10.0 * w).eval();
  };
  sys.hessian_vector_vector = [](const Vec&, double, const Vec&, const Vec&) {
    return Vec::Zero(1).eval();
  };
  sys.param_vector = [](const Vec&, double) { return Vec::Ones(1).eval(); };
  sys.param_vector_jacobian = [](const Vec&, double, const Vec&) {
    return Vec::Zero(1).eval();
  };
  return sys;
}

linresp::Observable constant_observable(double c) {
  linresp::Observable obs;
  obs.name = "const";
  obs.value = [c](const Vec&) { return c; };
  obs.gradient = [](const Vec& x) { return Vec::Zero(x.size()).eval(); };
  return obs;
}

}  // namespace

TEST_SUITE("orbit") {

TEST_CASE("windowed sums match a direct evaluation at every step") {
  const auto ns = linresp::make_named_system("solenoid");
  const auto cfg = small_config();
  const auto orbit = linresp::generate_orbit(ns.system, ns.observable, cfg);

  const double mean = orbit.phi_mean();
  for (long n = orbit.psi_lo(); n <= orbit.psi_hi(); ++n) {
    linresp::KahanSum s;
    for (long m = n - cfg.W; m <= n + cfg.W; ++m) s.add(orbit.phi(m) - mean);
    CHECK(std::abs(orbit.psi(n) - s.value()) <=
          1e-12 * (1.0 + std::abs(s.value())));
  }
}

TEST_CASE("constant observable gives its value as mean and zero window sums") {
  const auto sys = linresp::make_solenoid();
  auto cfg = small_config();
  cfg.A = 10;
  const auto orbit =
      linresp::generate_orbit(sys, constant_observable(3.7), cfg);
  CHECK(orbit.phi_mean() == doctest::Approx(3.7).epsilon(1e-14));
  for (long n = orbit.psi_lo(); n <= orbit.psi_hi(); ++n)
    CHECK(std::abs(orbit.psi(n)) <= 1e-11);
}

TEST_CASE("mean is the plain average over the core steps") {
  const auto ns = linresp::make_named_system("solenoid");
  const auto cfg = small_config();
  const auto orbit = linresp::generate_orbit(ns.system, ns.observable, cfg);
  long double acc = 0.0L;
  const long core = (long)cfg.A * cfg.N;
  for (long m = 0; m < core; ++m) acc += orbit.phi(m);
  const double direct = static_cast<double>(acc / core);
  CHECK(orbit.phi_mean() == doctest::Approx(direct).epsilon(1e-13));
}

TEST_CASE("stored forcing equals the parameter derivative at the source") {
  const auto ns = linresp::make_named_system("solenoid");
  const auto cfg = small_config();
  const auto orbit = linresp::generate_orbit(ns.system, ns.observable, cfg);
  for (long m : {orbit.lo_step() + 1, -3L, 0L, 7L, orbit.hi_step()}) {
    const Vec expect = ns.system.param_vector(orbit.state(m - 1), cfg.gamma);
    CHECK((orbit.forcing_into(m) - expect).norm() == 0.0);
  }
}

TEST_CASE("zero window width collapses psi to the centered observable") {
  const auto ns = linresp::make_named_system("solenoid");
  auto cfg = small_config();
  cfg.W = 0;
  const auto orbit = linresp::generate_orbit(ns.system, ns.observable, cfg);
  for (long n = orbit.psi_lo(); n <= orbit.psi_hi(); ++n)
    CHECK(std::abs(orbit.psi(n) - (orbit.phi(n) - orbit.phi_mean())) <=
          1e-14);
}

TEST_CASE("binary dump round-trips bit for bit") {
  const auto ns = linresp::make_named_system("solenoid");
  const auto cfg = small_config();
  const auto orbit = linresp::generate_orbit(ns.system, ns.observable, cfg);

  std::stringstream buf;
  linresp::dump_orbit_binary(orbit, buf);
  const auto back = linresp::load_orbit_binary(buf);

  CHECK(back.dim() == orbit.dim());
  CHECK(back.config().N == cfg.N);
  CHECK(back.config().A == cfg.A);
  CHECK(back.config().W == cfg.W);
  CHECK(back.config().seed == cfg.seed);
  CHECK(back.config().gamma == cfg.gamma);
  CHECK(back.phi_mean() == orbit.phi_mean());
  bool same = true;
  for (long m = orbit.lo_step(); m <= orbit.hi_step(); ++m) {
    if ((back.state(m) - orbit.state(m)).norm() != 0.0) same = false;
    if (back.phi(m) != orbit.phi(m)) same = false;
    if (m > orbit.lo_step() &&
        (back.forcing_into(m) - orbit.forcing_into(m)).norm() != 0.0)
      same = false;
  }
  for (long n = orbit.psi_lo(); n <= orbit.psi_hi(); ++n)
    if (back.psi(n) != orbit.psi(n)) same = false;
  CHECK(same);

  // A corrupted header must be rejected.
  std::stringstream bad;
  bad << "definitely not an orbit dump, padded to header length........";
  CHECK_THROWS_AS(linresp::load_orbit_binary(bad), linresp::ConfigError);
}

TEST_CASE("csv dump has a header and one row per stored step") {
  const auto ns = linresp::make_named_system("solenoid");
  auto cfg = small_config();
  cfg.A = 3;
  const auto orbit = linresp::generate_orbit(ns.system, ns.observable, cfg);
  std::stringstream buf;
  linresp::dump_orbit_csv(orbit, buf);
  std::string line;
  long rows = 0;
  bool header_ok = false;
  while (std::getline(buf, line)) {
    if (rows == 0) header_ok = (line == "step,x1,x2,x3,phi,psi");
    ++rows;
  }
  CHECK(header_ok);
  CHECK(rows == 1 + (orbit.hi_step() - orbit.lo_step() + 1));
}

TEST_CASE("configuration bounds are enforced") {
  auto ok = small_config();
  CHECK_NOTHROW(ok.check());
  auto bad = ok;
  bad.N = 0;
  CHECK_THROWS_AS(bad.check(), linresp::ConfigError);
  bad = ok;
  bad.A = 0;
  CHECK_THROWS_AS(bad.check(), linresp::ConfigError);
  bad = ok;
  bad.W = -1;
  CHECK_THROWS_AS(bad.check(), linresp::ConfigError);
  bad = ok;
  bad.warmup_segments = -1;
  CHECK_THROWS_AS(bad.check(), linresp::ConfigError);
  bad = ok;
  bad.spinup = -5;
  CHECK_THROWS_AS(bad.check(), linresp::ConfigError);
  bad = ok;
  bad.gamma = std::nan("");
  CHECK_THROWS_AS(bad.check(), linresp::ConfigError);
}

TEST_CASE("runaway trajectories raise a blow-up error with the step") {
  const auto sys = diverging_map();
  linresp::OrbitConfig cfg;
  cfg.N = 10;
  cfg.A = 50;
  cfg.W = 0;
  cfg.warmup_segments = 0;
  cfg.spinup = 0;
  cfg.seed = 1;
  cfg.gamma = 0.0;
  bool threw = false;
  try {
    linresp::generate_orbit(sys, linresp::coordinate_observable(1, 0), cfg);
  } catch (const linresp::BlowupError& e) {
    threw = true;
    CHECK(e.step > 0);
    CHECK(std::string(e.what()).find("step") != std::string::npos);
  }
  CHECK(threw);

  // With a long spin-up the same map dies before the stored range begins.
  cfg.spinup = 1000;
  try {
    linresp::generate_orbit(sys, linresp::coordinate_observable(1, 0), cfg);
    CHECK(false);
  } catch (const linresp::BlowupError& e) {
    CHECK(e.step < 0);
  }
}

TEST_CASE("identical configurations reproduce the trajectory bitwise") {
  const auto ns = linresp::make_named_system("solenoid");
  const auto cfg = small_config();
  const auto o1 = linresp::generate_orbit(ns.system, ns.observable, cfg);
  const auto o2 = linresp::generate_orbit(ns.system, ns.observable, cfg);
  CHECK(o1.phi_mean() == o2.phi_mean());
  bool same = true;
  for (long m = o1.lo_step(); m <= o1.hi_step(); ++m)
    if ((o1.state(m) - o2.state(m)).norm() != 0.0) same = false;
  CHECK(same);

  auto other = cfg;
  other.seed = 6;
  const auto o3 = linresp::generate_orbit(ns.system, ns.observable, other);
  CHECK((o1.state(0) - o3.state(0)).norm() > 0.0);
}

}  // TEST_SUITE("orbit")
