#include <cmath>
#include <vector>

#include "doctest.h"
#include "linresp/curvature.hpp"
#include "linresp/maps.hpp"
#include "linresp/numerics.hpp"
#include "linresp/orbit.hpp"
#include "linresp/tangent.hpp"

namespace {

using linresp::Mat;
using linresp::Vec;

// First two coordinate axes of R^3 as an orthonormal frame.
Mat axes12() {
  Mat Q = Mat::Zero(3, 2);
  Q(0, 0) = 1.0;
  Q(1, 1) = 1.0;
  return Q;
}

}  // namespace

TEST_SUITE("curvature") {

TEST_CASE("interface algebra on a one-column worked example") {
  const Mat Q = axes12();
  Mat R = Mat::Zero(2, 2);
  R(0, 0) = 2.0;
  R(1, 1) = 3.0;
  Mat r = Mat::Zero(3, 2);
  r.col(0) << 1, 1, 1;  // second column stays zero

  const Mat perp = linresp::project_out(r, Q);
  CHECK(perp(0, 0) == doctest::Approx(0.0));
  CHECK(perp(1, 0) == doctest::Approx(0.0));
  CHECK(perp(2, 0) == doctest::Approx(1.0));
  CHECK(perp.col(1).norm() == 0.0);

  const Mat out = linresp::interface_renormalize(r, Q, R);
  CHECK(out(2, 0) == doctest::Approx(0.5));
  CHECK(out.col(1).norm() == 0.0);
  CHECK(out.topRows(2).norm() <= 1e-15);

  CHECK(linresp::interface_trace(r, Q, R) == doctest::Approx(0.5));
}

TEST_CASE("interface algebra on a two-column worked example") {
  const Mat Q = axes12();
  Mat R = Mat::Zero(2, 2);
  R(0, 0) = 2.0;
  R(1, 1) = 3.0;
  Mat r = Mat::Ones(3, 2);

  const Mat perp = linresp::project_out(r, Q);
  CHECK(perp.topRows(2).norm() <= 1e-15);
  CHECK(perp(2, 0) == doctest::Approx(1.0));
  CHECK(perp(2, 1) == doctest::Approx(1.0));

  const Mat out = linresp::interface_renormalize(r, Q, R);
  CHECK(out(2, 0) == doctest::Approx(1.0 / 2.0));
  CHECK(out(2, 1) == doctest::Approx(1.0 / 3.0));

  // tr(R^{-1} Q^T r) = 1/2 + 1/3.
  CHECK(linresp::interface_trace(r, Q, R) == doctest::Approx(5.0 / 6.0));
}

TEST_CASE("projection removes exactly the in-span component") {
  const Mat raw = linresp::gaussian_matrix(17, 5, 3);
  const Mat Q = linresp::qr_positive(raw).Q;
  const Mat r = linresp::gaussian_matrix(18, 5, 3);
  const Mat perp = linresp::project_out(r, Q);
  CHECK((Q.transpose() * perp).norm() <= 1e-13 * (1.0 + r.norm()));
  // Idempotent, and the removed part lies in span(Q).
  CHECK((linresp::project_out(perp, Q) - perp).norm() <= 1e-13);
  const Mat removed = r - perp;
  CHECK((removed - Q * (Q.transpose() * removed)).norm() <= 1e-13);
}

TEST_CASE("renormalization and trace match explicit inverses") {
  const auto qr = linresp::qr_positive(linresp::gaussian_matrix(40, 4, 2));
  const Mat Q = qr.Q;
  Mat R = linresp::qr_positive(linresp::gaussian_matrix(41, 2, 2)).R;
  R += 0.5 * Mat::Identity(2, 2);  // keep it comfortably invertible
  const Mat r = linresp::gaussian_matrix(42, 4, 2);

  const Mat expect = linresp::project_out(r, Q) * R.inverse();
  CHECK((linresp::interface_renormalize(r, Q, R) - expect).norm() <=
        1e-12 * (1.0 + expect.norm()));

  const double texpect = (R.inverse() * (Q.transpose() * r)).trace();
  CHECK(linresp::interface_trace(r, Q, R) ==
        doctest::Approx(texpect).epsilon(1e-12));
}

TEST_CASE("zero-width frames are handled without work") {
  const Mat r(3, 0), Q(3, 0), R(0, 0);
  CHECK(linresp::project_out(r, Q).cols() == 0);
  CHECK(linresp::interface_renormalize(r, Q, R).cols() == 0);
  CHECK(linresp::interface_trace(r, Q, R) == 0.0);
}

TEST_CASE("per-segment sweeps chained by hand reproduce the average") {
  const auto ns = linresp::make_named_system("solenoid");
  linresp::OrbitConfig cfg;
  cfg.N = 10;
  cfg.A = 20;
  cfg.W = 5;
  cfg.seed = 9;
  cfg.gamma = 0.1;
  const auto orbit = linresp::generate_orbit(ns.system, ns.observable, cfg);
  const auto sweep = linresp::run_tangent_sweep(ns.system, orbit);
  const auto windowed =
      linresp::solve_nilss(sweep.records, linresp::ForcingKind::Windowed);

  const auto uc =
      linresp::unstable_contribution(ns.system, orbit, sweep, windowed);
  REQUIRE(uc.trace_terms.size() == 20);

  linresp::SecondOrderState st;
  st.r = Mat::Zero(3, 2);
  linresp::KahanSum acc;
  for (long alpha = 0; alpha < cfg.A; ++alpha) {
    auto [seg, next] = linresp::sweep_second_order(
        ns.system, orbit, sweep, windowed.a[static_cast<std::size_t>(alpha)],
        alpha, std::move(st));
    CHECK(seg.trace_term ==
          uc.trace_terms[static_cast<std::size_t>(alpha)]);
    CHECK(seg.start_projection <= 1e-10);
    acc.add(seg.trace_term);
    st = std::move(next);
  }
  const double mean = acc.value() / (cfg.N * cfg.A);
  CHECK(uc.value == doctest::Approx(mean).epsilon(1e-12));
  CHECK(uc.max_start_projection <= 1e-10);
}

TEST_CASE("the average forgets an arbitrary initial state") {
  const auto ns = linresp::make_named_system("solenoid");
  linresp::OrbitConfig cfg;
  cfg.N = 10;
  cfg.A = 40;
  cfg.W = 5;
  cfg.seed = 12;
  cfg.gamma = 0.1;
  const auto orbit = linresp::generate_orbit(ns.system, ns.observable, cfg);
  const auto sweep = linresp::run_tangent_sweep(ns.system, orbit);
  const auto windowed =
      linresp::solve_nilss(sweep.records, linresp::ForcingKind::Windowed);

  const int discard = 10;
  const auto base = linresp::unstable_contribution(ns.system, orbit, sweep,
                                                   windowed, discard);
  const Mat r0 = linresp::gaussian_matrix(77, 3, 2);
  const auto seeded = linresp::unstable_contribution(ns.system, orbit, sweep,
                                                     windowed, discard, &r0);
  CHECK(seeded.value ==
        doctest::Approx(base.value).epsilon(0.01).scale(0.01));
  CHECK(seeded.max_start_projection <= 1e-8);

  // Discarding only drops leading terms from the average, never reorders.
  const auto full = linresp::unstable_contribution(ns.system, orbit, sweep,
                                                   windowed, 0);
  for (std::size_t i = 0; i < full.trace_terms.size(); ++i)
    CHECK(full.trace_terms[i] == base.trace_terms[i]);
  linresp::KahanSum tail;
  for (std::size_t i = discard; i < base.trace_terms.size(); ++i)
    tail.add(base.trace_terms[i]);
  CHECK(base.value ==
        doctest::Approx(tail.value() / (cfg.N * (cfg.A - discard)))
            .epsilon(1e-12));
}

TEST_CASE("a constant observable produces no unstable contribution") {
  const auto sys = linresp::make_solenoid();
  linresp::Observable obs;
  obs.name = "const";
  obs.value = [](const Vec&) { return 1.25; };
  obs.gradient = [](const Vec& x) { return Vec::Zero(x.size()).eval(); };

  linresp::OrbitConfig cfg;
  cfg.N = 10;
  cfg.A = 20;
  cfg.W = 5;
  cfg.seed = 2;
  cfg.gamma = 0.1;
  const auto orbit = linresp::generate_orbit(sys, obs, cfg);
  const auto sweep = linresp::run_tangent_sweep(sys, orbit);
  const auto windowed =
      linresp::solve_nilss(sweep.records, linresp::ForcingKind::Windowed);
  const auto uc =
      linresp::unstable_contribution(sys, orbit, sweep, windowed);
  CHECK(std::abs(uc.value) <= 1e-8);
}

}  // TEST_SUITE("curvature")
