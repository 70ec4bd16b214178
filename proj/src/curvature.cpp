#include "linresp/curvature.hpp"

#include <cmath>

#include "linresp/errors.hpp"

namespace linresp {

Mat project_out(const Mat& r, const Mat& Q) {
  if (Q.cols() == 0) return r;
  return r - Q * (Q.transpose() * r);
}

Mat interface_renormalize(const Mat& r, const Mat& Q, const Mat& R) {
  if (Q.cols() == 0) return r;
  const Mat p = project_out(r, Q);
  // p * R^{-1}, via a triangular solve on the right.
  return R.transpose()
      .triangularView<Eigen::Lower>()
      .solve(p.transpose())
      .transpose();
}

double interface_trace(const Mat& r, const Mat& Q, const Mat& R) {
  if (Q.cols() == 0) return 0.0;
  const Mat qr = Q.transpose() * r;  // u x u
  const Mat x = R.triangularView<Eigen::Upper>().solve(qr);
  return x.trace();
}

std::pair<SegmentCurvature, SecondOrderState> sweep_second_order(
    const MapSystem& sys, const Orbit& orbit, const TangentSweep& sweep,
    const Vec& at_alpha, long alpha, SecondOrderState in) {
  const int N = orbit.config().N;
  const int M = orbit.dim();
  const double g = orbit.config().gamma;
  if (alpha < 0 || alpha >= static_cast<long>(sweep.records.size()))
    throw ConfigError("second-order sweep: segment index out of range");
  const SegmentRecord& rec = sweep.records[static_cast<std::size_t>(alpha)];
  const Eigen::Index u = rec.Q.cols();
  if (in.r.rows() != M || in.r.cols() != u)
    throw ConfigError("second-order sweep: state shape mismatch");
  if (at_alpha.size() != u)
    throw ConfigError("second-order sweep: coefficient size mismatch");

  TangentState st = segment_start(sweep, alpha);
  for (int n = 0; n < N; ++n) {
    const long m = alpha * N + n;
    const Vec& x = orbit.state(m);
    const Vec vt = st.vtp + st.e * at_alpha;
    const double psi_next = orbit.psi(m + 1);
    Mat next(M, u);
    for (Eigen::Index j = 0; j < u; ++j)
      next.col(j) = sys.jacobian_vector(x, g, in.r.col(j)) +
                    sys.hessian_vector_vector(x, g, vt, st.e.col(j)) +
                    psi_next * sys.param_vector_jacobian(x, g, st.e.col(j));
    in.r = std::move(next);
    tangent_step(sys, orbit, m, &st.e, nullptr, &st.vtp);
  }

  if (!in.r.allFinite())
    throw BlowupError("second-order state blew up on segment " +
                          std::to_string(alpha),
                      (alpha + 1) * N);

  SegmentCurvature out;
  out.trace_term = interface_trace(in.r, rec.Q, rec.R);
  SecondOrderState next;
  next.r = interface_renormalize(in.r, rec.Q, rec.R);
  if (u > 0)
    out.start_projection = (rec.Q.transpose() * next.r).norm();
  return {out, std::move(next)};
}

UnstableContribution unstable_contribution(const MapSystem& sys,
                                           const Orbit& orbit,
                                           const TangentSweep& sweep,
                                           const ShadowingSolution& windowed,
                                           int discard_segments,
                                           const Mat* r0) {
  const int N = orbit.config().N;
  const long A = static_cast<long>(sweep.records.size());
  if (static_cast<long>(windowed.a.size()) != A)
    throw ConfigError(
        "unstable contribution: solution/segment count mismatch");
  if (discard_segments < 0 || discard_segments >= A)
    throw ConfigError(
        "unstable contribution: discard_segments must lie in [0, A)");

  const Eigen::Index u = sweep.initial.e.cols();
  SecondOrderState st;
  st.r = r0 ? project_out(*r0, sweep.initial.e) : Mat::Zero(orbit.dim(), u);
  if (st.r.rows() != orbit.dim() || st.r.cols() != u)
    throw ConfigError("unstable contribution: injected r0 has wrong shape");

  UnstableContribution out;
  out.trace_terms.resize(static_cast<std::size_t>(A));
  KahanSum total;
  for (long alpha = 0; alpha < A; ++alpha) {
    auto [seg, next] = sweep_second_order(
        sys, orbit, sweep, windowed.a[static_cast<std::size_t>(alpha)], alpha,
        std::move(st));
    out.trace_terms[static_cast<std::size_t>(alpha)] = seg.trace_term;
    out.max_start_projection =
        std::max(out.max_start_projection, seg.start_projection);
    if (alpha >= discard_segments) total.add(seg.trace_term);
    st = std::move(next);
  }
  out.value =
      total.value() / (static_cast<double>(N) * (A - discard_segments));
  return out;
}

}  // namespace linresp
