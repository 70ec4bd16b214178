#include "linresp/tangent.hpp"

#include <cmath>
#include <cstdio>

#include "linresp/errors.hpp"

namespace linresp {

void tangent_step(const MapSystem& sys, const Orbit& orbit, long m, Mat* e,
                  Vec* vp, Vec* vtp) {
  const Vec& x = orbit.state(m);
  const double g = orbit.config().gamma;
  if (e) {
    Mat next(e->rows(), e->cols());
    for (Eigen::Index j = 0; j < e->cols(); ++j)
      next.col(j) = sys.jacobian_vector(x, g, e->col(j));
    *e = std::move(next);
  }
  if (vp) *vp = sys.jacobian_vector(x, g, *vp) + orbit.forcing_into(m + 1);
  if (vtp)
    *vtp = sys.jacobian_vector(x, g, *vtp) +
           orbit.psi(m + 1) * orbit.forcing_into(m + 1);
}

std::pair<SegmentRecord, TangentState> sweep_segment(
    const MapSystem& sys, const Orbit& orbit, long alpha, TangentState in,
    const TangentVisitor& visit) {
  const int N = orbit.config().N;
  const int M = orbit.dim();
  const Eigen::Index u = in.e.cols();
  if (in.e.rows() != M || in.vp.size() != M || in.vtp.size() != M)
    throw ConfigError("tangent sweep: state dimensions do not match orbit");

  const long base = alpha * N;
  KahanMat accC(u, u), accD(u, 1), accDt(u, 1);

  for (int n = 0; n <= N; ++n) {
    if (visit) visit(n, in.e, in.vp, in.vtp);
    const double w = (n == 0 || n == N) ? 0.5 : 1.0;
    accC.add(w * (in.e.transpose() * in.e));
    accD.add(w * (in.e.transpose() * in.vp));
    accDt.add(w * (in.e.transpose() * in.vtp));
    if (n < N) tangent_step(sys, orbit, base + n, &in.e, &in.vp, &in.vtp);
  }

  if (!in.e.allFinite() || !in.vp.allFinite() || !in.vtp.allFinite())
    throw BlowupError("tangent state blew up on segment " +
                          std::to_string(alpha),
                      base + N);

  SegmentRecord rec;
  rec.C = accC.value();
  rec.d = accD.value();
  rec.dt = accDt.value();
  rec.e_end = in.e;
  rec.v_end = in.vp;
  rec.vt_end = in.vtp;

  ThinQr qr = qr_positive(in.e);
  for (Eigen::Index i = 0; i < u; ++i) {
    if (std::abs(qr.R(i, i)) < 1e-30)
      throw ConditioningError(
          "tangent basis lost rank at the end of segment " +
          std::to_string(alpha) +
          " (|R_" + std::to_string(i) + std::to_string(i) +
          "| < 1e-30); use a shorter segment length N");
  }
  rec.Q = std::move(qr.Q);
  rec.R = std::move(qr.R);
  rec.b = rec.Q.transpose() * in.vp;
  rec.bt = rec.Q.transpose() * in.vtp;

  TangentState out;
  out.e = rec.Q;
  out.vp = in.vp - rec.Q * rec.b;
  out.vtp = in.vtp - rec.Q * rec.bt;
  return {std::move(rec), std::move(out)};
}

TangentSweep run_tangent_sweep(const MapSystem& sys, const Orbit& orbit) {
  const OrbitConfig& cfg = orbit.config();
  const int M = orbit.dim();
  const int u = sys.unstable_dim;
  if (sys.dim != M)
    throw ConfigError("tangent sweep: system dimension does not match orbit");

  TangentState st;
  st.e = qr_positive(gaussian_matrix(mix_seed(cfg.seed, 0x7a17), M, u)).Q;
  st.vp = Vec::Zero(M);
  st.vtp = Vec::Zero(M);

  for (long alpha = -cfg.warmup_segments; alpha < 0; ++alpha)
    st = sweep_segment(sys, orbit, alpha, std::move(st)).second;

  TangentSweep sweep;
  sweep.initial = st;
  sweep.records.reserve(static_cast<std::size_t>(cfg.A));

  double r_diag_max = 0.0;
  std::vector<KahanSum> logsum(static_cast<std::size_t>(u));
  for (long alpha = 0; alpha < cfg.A; ++alpha) {
    auto [rec, next] = sweep_segment(sys, orbit, alpha, std::move(st));
    for (int i = 0; i < u; ++i)
      logsum[static_cast<std::size_t>(i)].add(std::log(rec.R(i, i)));
    double dmax = 0.0;
    for (int i = 0; i < u; ++i) dmax = std::max(dmax, rec.R(i, i));
    r_diag_max = std::max(r_diag_max, dmax);
    if (dmax > 1e8) ++sweep.r_diag_warnings;
    sweep.records.push_back(std::move(rec));
    st = std::move(next);
  }

  if (sweep.r_diag_warnings > 0)
    std::fprintf(stderr,
                 "warning: tangent renormalization saw max diag(R) = %.3e "
                 "(> 1e8) on %d segment(s); consider a shorter segment "
                 "length N\n",
                 r_diag_max, sweep.r_diag_warnings);

  sweep.lyapunov.resize(static_cast<std::size_t>(u));
  const double total_steps = static_cast<double>(cfg.A) * cfg.N;
  for (int i = 0; i < u; ++i)
    sweep.lyapunov[static_cast<std::size_t>(i)] =
        logsum[static_cast<std::size_t>(i)].value() / total_steps;

  return sweep;
}

TangentState segment_start(const TangentSweep& sweep, long alpha) {
  if (alpha == 0) return sweep.initial;
  if (alpha < 0 || alpha > static_cast<long>(sweep.records.size()))
    throw ConfigError("segment_start: segment index out of range");
  const SegmentRecord& rec = sweep.records[static_cast<std::size_t>(alpha - 1)];
  TangentState st;
  st.e = rec.Q;
  st.vp = rec.v_end - rec.Q * rec.b;
  st.vtp = rec.vt_end - rec.Q * rec.bt;
  return st;
}

}  // namespace linresp
