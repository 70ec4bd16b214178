#pragma once

#include "linresp/shadow.hpp"

namespace linresp {

// Second-order tangent data carried across a segment: one column per tracked
// unstable direction, orthogonal to the current basis at segment starts.
struct SecondOrderState {
  Mat r;  // dim x u
};

// Interface algebra, exposed separately so it can be unit-tested as pure
// matrix arithmetic.  Q (dim x u, orthonormal) and R (u x u upper
// triangular) come from the first-order sweep's renormalization at the same
// interface.
//
// project_out:          r - Q Q^T r       (component orthogonal to span Q)
// interface_renormalize: (r - Q Q^T r) R^{-1}
// interface_trace:       tr(R^{-1} Q^T r)
Mat project_out(const Mat& r, const Mat& Q);
Mat interface_renormalize(const Mat& r, const Mat& Q, const Mat& R);
double interface_trace(const Mat& r, const Mat& Q, const Mat& R);

// Advance a second-order state across segment `alpha`:
//   r <- (Df) r + (D^2 f)[vt, e] + psi' * (D_x df/dgamma) e   per column,
// where e is the replayed homogeneous basis, vt = vtp + e * at_alpha is the
// reconstructed windowed shadowing direction, and psi' is the centered
// window sum at the arrival step.  At the terminal interface the trace term
// tr(R^{-1} Q^T r_end) is taken and r is renormalized.  The replay reuses
// the sweep's step kernel and stored records, so it is bit-consistent with
// the original sweep.
struct SegmentCurvature {
  double trace_term = 0.0;
  // || Q^T r || right after the projection (should vanish to round-off).
  double start_projection = 0.0;
};
std::pair<SegmentCurvature, SecondOrderState> sweep_second_order(
    const MapSystem& sys, const Orbit& orbit, const TangentSweep& sweep,
    const Vec& at_alpha, long alpha, SecondOrderState in);

// Average of the per-segment trace terms divided by the segment length:
//   U.C. = (1 / (N * (A - discard))) * sum_{alpha >= discard} trace_alpha.
// All segments are swept (the state must propagate); `discard_segments`
// only drops leading trace terms from the average, letting the state forget
// its (arbitrary) start.  `r0` optionally injects a nonzero start in place
// of zero; it is projected orthogonal to the initial basis first.
struct UnstableContribution {
  double value = 0.0;
  std::vector<double> trace_terms;     // one per segment, before discarding
  double max_start_projection = 0.0;   // worst || Q^T r || seen at any start
};
UnstableContribution unstable_contribution(const MapSystem& sys,
                                           const Orbit& orbit,
                                           const TangentSweep& sweep,
                                           const ShadowingSolution& windowed,
                                           int discard_segments = 0,
                                           const Mat* r0 = nullptr);

}  // namespace linresp
