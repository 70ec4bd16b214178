// Acceptance gate: one line per criterion, exit 0 only if every criterion
// holds.  Each check states its tolerance next to the measured value so a
// failure is diagnosable from the output alone.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "json.hpp"
#include "linresp/cli.hpp"
#include "linresp/curvature.hpp"
#include "linresp/maps.hpp"
#include "linresp/oracle.hpp"
#include "linresp/response.hpp"

namespace {

using linresp::Mat;
using linresp::Vec;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

void report(int index, bool pass, const std::string& detail) {
  std::printf("[%s] %d. %s\n", pass ? "PASS" : "FAIL", index, detail.c_str());
  std::fflush(stdout);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// ---- criterion 1: exact analytic contraction -------------------------------

bool criterion_exact_contraction() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto ns = linresp::make_named_system("contracting_affine");
  linresp::ResponseConfig cfg;
  cfg.orbit.N = 20;
  cfg.orbit.A = 50;
  cfg.orbit.seed = 7;
  cfg.orbit.gamma = 0.1;
  const auto rep = linresp::compute_response(ns.system, ns.observable, cfg);
  const double err = std::abs(rep.derivative - 2.0);
  const double wall = seconds_since(t0);
  const bool pass = err <= 1e-6 && wall < 1.0;
  report(1, pass,
         "exact contraction: |derivative - 2| = " + fmt(err) +
             " (tol 1e-06), " + fmt(wall) + " s (< 1 s)");
  return pass;
}

// ---- criterion 2: solenoid defaults vs finite-difference slope -------------

bool criterion_defaults_vs_oracle() {
  const auto ns = linresp::make_named_system("solenoid");
  linresp::ResponseConfig rc;  // defaults: N=20, A=1000, W=10, gamma=0.1
  rc.orbit.seed = 11;
  const auto set = linresp::replicate(ns.system, ns.observable, rc, 8, 0);

  linresp::FdOracleConfig oc;
  oc.gamma_grid = linresp::default_oracle_grid(rc.orbit.gamma);
  oc.steps_per_run = 20000;
  oc.runs_per_gamma = 4;
  oc.spinup = 1000;
  oc.seed = linresp::mix_seed(rc.orbit.seed, 0x0eac1e);
  const auto reg = linresp::fd_regression(ns.system, ns.observable, oc);

  const double se_method = set.derivative_std / std::sqrt(8.0);
  const double se = std::hypot(se_method, reg.slope_stderr);
  const double diff = std::abs(set.derivative_mean - reg.slope);
  const bool pass = set.failures == 0 && diff <= 3.0 * se;
  report(2, pass,
         "defaults vs finite-difference slope: |" +
             fmt(set.derivative_mean) + " - " + fmt(reg.slope) + "| = " +
             fmt(diff) + " <= 3*se = " + fmt(3.0 * se));
  return pass;
}

// ---- criterion 3: replica spread shrinks with the segment count ------------

bool criterion_segment_scaling() {
  linresp::RunConfig cfg;
  cfg.map = "solenoid";
  cfg.reps = 8;
  cfg.response.orbit.seed = 2;
  cfg.a_list = {125, 250, 500, 1000, 2000};
  const auto ns = linresp::make_named_system(cfg.map);
  const auto res = linresp::scaling_in_segments(ns, cfg);
  const double slope = res.std_loglog_slope;
  const bool pass = slope >= -0.7 && slope <= -0.3;
  std::string detail =
      "spread vs segment count: log-log std slope " + fmt(slope) +
      " in [-0.7, -0.3]; std:";
  for (const auto& pt : res.points)
    detail += " A=" + fmt(pt.value) + ":" + fmt(pt.std);
  report(3, pass, detail);
  return pass;
}

// ---- criterion 4: replica spread grows with the window width ---------------

bool criterion_window_scaling() {
  linresp::RunConfig cfg;
  cfg.map = "solenoid";
  cfg.reps = 8;
  cfg.response.orbit.seed = 5;
  cfg.w_list = {2, 5, 10, 20, 40};
  const auto ns = linresp::make_named_system(cfg.map);
  const auto res = linresp::scaling_in_window(ns, cfg);
  const double slope = res.std_loglog_slope;

  double std_at_10 = -1.0;
  for (const auto& pt : res.points)
    if (pt.value == 10.0) std_at_10 = pt.std;
  const double lo = 0.016 / 3.0, hi = 0.016 * 3.0;
  const bool slope_ok = slope >= 0.3 && slope <= 0.7;
  const bool band_ok = std_at_10 >= lo && std_at_10 <= hi;
  report(4, slope_ok && band_ok,
         "spread vs window width: log-log std slope " + fmt(slope) +
             " in [0.3, 0.7]; std(W=10) = " + fmt(std_at_10) + " in [" +
             fmt(lo) + ", " + fmt(hi) + "]");
  return slope_ok && band_ok;
}

// ---- criterion 5: fully expanding map vs its oracle -------------------------

bool criterion_fully_expanding() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto ns = linresp::make_named_system("expanding_circle");
  linresp::ResponseConfig rc;
  rc.orbit.gamma = 0.3;
  rc.orbit.seed = 41;
  const auto rep = linresp::compute_response(ns.system, ns.observable, rc);

  linresp::FdOracleConfig oc;
  oc.gamma_grid = linresp::default_oracle_grid(rc.orbit.gamma);
  oc.steps_per_run = 20000;
  oc.runs_per_gamma = 4;
  oc.spinup = 1000;
  oc.seed = linresp::mix_seed(rc.orbit.seed, 0x0eac1e);
  const auto reg = linresp::fd_regression(ns.system, ns.observable, oc);

  const double diff = std::abs(rep.derivative - reg.slope);
  const double wall = seconds_since(t0);
  const bool pass = diff <= 3.0 * reg.slope_stderr && wall < 60.0;
  report(5, pass,
         "fully expanding map vs oracle: |" + fmt(rep.derivative) + " - " +
             fmt(reg.slope) + "| = " + fmt(diff) +
             " <= 3*se = " + fmt(3.0 * reg.slope_stderr) + ", " + fmt(wall) +
             " s (< 60 s)");
  return pass;
}

// ---- criterion 6: property suite --------------------------------------------

double feasible_objective(const std::vector<linresp::SegmentRecord>& recs,
                          const std::vector<Vec>& a) {
  long double acc = 0.0L;
  for (std::size_t alpha = 0; alpha < recs.size(); ++alpha) {
    acc += 2.0L * static_cast<long double>(recs[alpha].d.dot(a[alpha]));
    acc += static_cast<long double>(a[alpha].dot(recs[alpha].C * a[alpha]));
  }
  return static_cast<double>(acc);
}

bool criterion_properties() {
  std::vector<std::string> failures;
  auto require = [&failures](bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  };

  const auto ns = linresp::make_named_system("solenoid");

  // Orthonormal interface bases and clean second-order projections.
  {
    linresp::OrbitConfig oc;
    oc.N = 10;
    oc.A = 40;
    oc.W = 5;
    oc.spinup = 300;
    oc.seed = 3;
    oc.gamma = 0.1;
    const auto orbit = linresp::generate_orbit(ns.system, ns.observable, oc);
    const auto sweep = linresp::run_tangent_sweep(ns.system, orbit);
    double worst = 0.0;
    const Mat eye = Mat::Identity(2, 2);
    for (const auto& rec : sweep.records)
      worst = std::max(worst, (rec.Q.transpose() * rec.Q - eye).norm());
    require(worst <= 1e-10, "interface orthonormality " + fmt(worst) +
                                " > 1e-10");
    const auto windowed =
        linresp::solve_nilss(sweep.records, linresp::ForcingKind::Windowed);
    const auto uc =
        linresp::unstable_contribution(ns.system, orbit, sweep, windowed);
    require(uc.max_start_projection <= 1e-8,
            "post-projection overlap " + fmt(uc.max_start_projection) +
                " > 1e-8");
  }

  // Constrained-solution residuals at the stated tolerance, and optimality
  // against feasible perturbations.
  {
    linresp::OrbitConfig oc;
    oc.N = 8;
    oc.A = 40;
    oc.W = 10;
    oc.spinup = 1000;
    oc.seed = 1;
    oc.gamma = 0.1;
    const auto orbit = linresp::generate_orbit(ns.system, ns.observable, oc);
    const auto sweep = linresp::run_tangent_sweep(ns.system, orbit);
    const auto sol =
        linresp::solve_nilss(sweep.records, linresp::ForcingKind::Parameter);
    require(sol.constraint_residual <= 1e-8,
            "constraint residual " + fmt(sol.constraint_residual) +
                " > 1e-8");
    require(sol.stationarity_residual <= 1e-6,
            "stationarity residual " + fmt(sol.stationarity_residual) +
                " > 1e-6");

    const double jstar = feasible_objective(sweep.records, sol.a);
    bool improved = false;
    for (std::uint64_t trial = 0; trial < 8 && !improved; ++trial) {
      const double scale = trial < 4 ? 1e-3 : 1.0;
      std::vector<Vec> perturbed = sol.a;
      Vec delta = scale *
                  linresp::gaussian_matrix(linresp::mix_seed(4, trial), 2, 1)
                      .col(0);
      perturbed[0] += delta;
      for (std::size_t alpha = 1; alpha < perturbed.size(); ++alpha) {
        delta = sweep.records[alpha - 1].R * delta;
        perturbed[alpha] += delta;
      }
      if (feasible_objective(sweep.records, perturbed) <
          jstar - 1e-10 * (1.0 + std::abs(jstar)))
        improved = true;
    }
    require(!improved, "a feasible perturbation beat the returned minimum");
  }

  // Shift invariance and linearity in the observable.
  {
    linresp::ResponseConfig rc;
    rc.orbit.N = 10;
    rc.orbit.A = 30;
    rc.orbit.W = 5;
    rc.orbit.spinup = 300;
    rc.orbit.seed = 6;
    rc.orbit.gamma = 0.1;
    rc.validate = false;
    const auto base =
        linresp::compute_response(ns.system, ns.observable, rc);

    linresp::Observable shifted;
    shifted.name = "x1_plus_c";
    shifted.value = [](const Vec& x) { return x[0] + 5.0; };
    shifted.gradient = [](const Vec&) {
      Vec g = Vec::Zero(3);
      g[0] = 1.0;
      return g;
    };
    const auto shift = linresp::compute_response(ns.system, shifted, rc);
    const double shift_err = std::abs(shift.derivative - base.derivative) /
                             (1.0 + std::abs(base.derivative));
    require(shift_err <= 1e-8,
            "shift invariance " + fmt(shift_err) + " > 1e-8");

    linresp::Observable second;
    second.name = "cos_x2";
    second.value = [](const Vec& x) { return std::cos(x[1]); };
    second.gradient = [](const Vec& x) {
      Vec g = Vec::Zero(3);
      g[1] = -std::sin(x[1]);
      return g;
    };
    const auto d2 = linresp::compute_response(ns.system, second, rc);

    linresp::Observable combo;
    combo.name = "combo";
    combo.value = [](const Vec& x) {
      return 2.0 * x[0] - 3.0 * std::cos(x[1]);
    };
    combo.gradient = [](const Vec& x) {
      Vec g = Vec::Zero(3);
      g[0] = 2.0;
      g[1] = 3.0 * std::sin(x[1]);
      return g;
    };
    const auto dc = linresp::compute_response(ns.system, combo, rc);
    const double expect = 2.0 * base.derivative - 3.0 * d2.derivative;
    const double lin_err =
        std::abs(dc.derivative - expect) / (1.0 + std::abs(expect));
    require(lin_err <= 1e-8, "linearity " + fmt(lin_err) + " > 1e-8");
  }

  // The unstable average forgets an injected start within 1% once ten
  // segments are discarded.
  {
    linresp::OrbitConfig oc;
    oc.N = 10;
    oc.A = 40;
    oc.W = 5;
    oc.spinup = 300;
    oc.seed = 12;
    oc.gamma = 0.1;
    const auto orbit = linresp::generate_orbit(ns.system, ns.observable, oc);
    const auto sweep = linresp::run_tangent_sweep(ns.system, orbit);
    const auto windowed =
        linresp::solve_nilss(sweep.records, linresp::ForcingKind::Windowed);
    const auto base = linresp::unstable_contribution(ns.system, orbit, sweep,
                                                     windowed, 10);
    const Mat r0 = linresp::gaussian_matrix(77, 3, 2);
    const auto seeded = linresp::unstable_contribution(
        ns.system, orbit, sweep, windowed, 10, &r0);
    const double rel =
        std::abs(seeded.value - base.value) / std::abs(base.value);
    require(rel <= 0.01, "start forgetting " + fmt(rel) + " > 1%");
  }

  // Every derivative callback of every built-in map against central
  // finite differences.
  for (const auto& name : linresp::builtin_system_names()) {
    const auto sys = linresp::make_named_system(name);
    const double gamma = name == "expanding_circle" ? 0.3 : 0.1;
    const auto v = linresp::validate_system(sys.system, sys.observable, gamma,
                                            32, 2024);
    require(v.ok() && v.worst() <= 1e-5,
            name + " callbacks worst " + fmt(v.worst()) + " > 1e-5");
  }

  std::string detail =
      "property suite: orthonormal interfaces, clean projections, solver "
      "residuals, optimality, shift invariance, linearity, start "
      "forgetting, callback consistency";
  if (!failures.empty()) {
    detail = "property suite: ";
    for (std::size_t i = 0; i < failures.size(); ++i)
      detail += (i ? "; " : "") + failures[i];
  }
  report(6, failures.empty(), detail);
  return failures.empty();
}

// ---- criterion 7: bit-identical reruns --------------------------------------

bool criterion_determinism() {
  const auto ns = linresp::make_named_system("solenoid");
  linresp::ResponseConfig rc;
  rc.orbit.N = 10;
  rc.orbit.A = 50;
  rc.orbit.W = 5;
  rc.orbit.spinup = 300;
  rc.orbit.seed = 123;
  rc.orbit.gamma = 0.1;
  rc.validate = false;

  const auto r1 = linresp::compute_response(ns.system, ns.observable, rc);
  const auto r2 = linresp::compute_response(ns.system, ns.observable, rc);
  const auto j1 = nlohmann::json::parse(linresp::report_to_json(r1));
  const auto j2 = nlohmann::json::parse(linresp::report_to_json(r2));
  const bool single_ok = j1["data"].dump() == j2["data"].dump();

  const auto s1 = linresp::replicate(ns.system, ns.observable, rc, 3, 1);
  const auto s2 = linresp::replicate(ns.system, ns.observable, rc, 3, 3);
  const auto k1 = nlohmann::json::parse(linresp::replica_set_to_json(s1));
  const auto k2 = nlohmann::json::parse(linresp::replica_set_to_json(s2));
  const bool replicas_ok = k1["data"].dump() == k2["data"].dump();

  const bool pass = single_ok && replicas_ok;
  report(7, pass,
         std::string("determinism: repeated runs ") +
             (single_ok ? "identical" : "DIFFER") +
             ", serial vs threaded replicas " +
             (replicas_ok ? "identical" : "DIFFER") +
             " (data sections, byte compare)");
  return pass;
}

}  // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();
  int passed = 0;
  const bool ok1 = criterion_exact_contraction();
  const bool ok2 = criterion_defaults_vs_oracle();
  const bool ok3 = criterion_segment_scaling();
  const bool ok4 = criterion_window_scaling();
  const bool ok5 = criterion_fully_expanding();
  const bool ok6 = criterion_properties();
  const bool ok7 = criterion_determinism();
  for (bool b : {ok1, ok2, ok3, ok4, ok5, ok6, ok7}) passed += b ? 1 : 0;
  std::printf("acceptance: %d/7 criteria satisfied (%.1f s total)\n", passed,
              seconds_since(t0));
  return passed == 7 ? 0 : 1;
}
