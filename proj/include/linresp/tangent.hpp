#pragma once

#include <functional>
#include <utility>

#include "linresp/orbit.hpp"

namespace linresp {

// Tangent data carried across a segment: the homogeneous basis e (dim x u)
// and the two inhomogeneous solutions (both kept orthogonal to the basis at
// segment starts by the interface projections).
struct TangentState {
  Mat e;      // homogeneous basis, one column per tracked direction
  Vec vp;     // inhomogeneous solution forced by d f / d gamma
  Vec vtp;    // inhomogeneous solution forced by the windowed observable sum
};

// Everything the downstream solves need from one segment, recorded at its
// terminal interface.  With the convention used throughout, records[alpha]
// holds the interface quantities at the END of segment alpha (i.e. what the
// constraint between segments alpha and alpha+1 consumes).
struct SegmentRecord {
  Mat Q;   // orthonormal basis after renormalization (dim x u)
  Mat R;   // upper-triangular factor, positive diagonal (u x u)
  Vec b;   // Q^T vp at the interface
  Vec bt;  // Q^T vtp at the interface
  // Trapezoid accumulations over the segment's N+1 step values, with half
  // weight at both endpoints (so adjacent segments sum to a flat average).
  Mat C;   // sum' of e^T e   (u x u, symmetric positive definite)
  Vec d;   // sum' of e^T vp
  Vec dt;  // sum' of e^T vtp
  // Terminal values before renormalization; replays restart from these.
  Mat e_end;
  Vec v_end;
  Vec vt_end;
};

struct TangentSweep {
  TangentState initial;  // state at the start of segment 0 (after warmup)
  std::vector<SegmentRecord> records;    // one per averaged segment
  std::vector<double> lyapunov;          // per-direction exponent estimates
  int r_diag_warnings = 0;  // interfaces where max diag(R) exceeded 1e8
};

// Advance (e, vp, vtp) by one step of the homogeneous/inhomogeneous
// recursions, from global step m to m+1:
//   e    <- (Df) e
//   vp   <- (Df) vp  + forcing_into(m+1)
//   vtp  <- (Df) vtp + psi(m+1) * forcing_into(m+1)
// Null pointers skip the corresponding recursion.  This is the single step
// kernel shared by the sweep and every replay, so replayed streams are
// bit-identical to the original sweep.
void tangent_step(const MapSystem& sys, const Orbit& orbit, long m, Mat* e,
                  Vec* vp, Vec* vtp);

// Called by sweep_segment at every local step n = 0..N with the current
// (pre-renormalization at n = N) tangent state.
using TangentVisitor =
    std::function<void(int n, const Mat& e, const Vec& vp, const Vec& vtp)>;

// Advance a tangent state across segment `alpha` (global steps alpha*N to
// (alpha+1)*N), accumulate the trapezoid sums, then renormalize at the
// terminal interface: e_end = Q R, b = Q^T v_end, and the returned state is
// {Q, v_end - Q b, vt_end - Q bt}.  Throws ConditioningError if diag(R)
// collapses below 1e-30 (suggesting a shorter segment length).
std::pair<SegmentRecord, TangentState> sweep_segment(
    const MapSystem& sys, const Orbit& orbit, long alpha, TangentState in,
    const TangentVisitor& visit = {});

// Full sweep: seed e with the orthonormalized Gaussian basis (derived from
// the orbit's seed), start vp = vtp = 0, run the configured warmup segments
// (records discarded), then segments 0..A-1.  Also estimates the per-
// direction exponents from the mean of log diag(R) over the kept segments.
TangentSweep run_tangent_sweep(const MapSystem& sys, const Orbit& orbit);

// Tangent state at the start of segment `alpha`, reconstructed from sweep
// data exactly as the sweep itself produced it (alpha = 0 gives
// sweep.initial; otherwise it is rebuilt from records[alpha-1]).
TangentState segment_start(const TangentSweep& sweep, long alpha);

}  // namespace linresp
