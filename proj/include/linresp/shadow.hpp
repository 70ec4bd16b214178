#pragma once

#include <utility>

#include "linresp/tangent.hpp"

namespace linresp {

// Which inhomogeneous solution a solve targets: the one forced by
// d f / d gamma (used for the shadowing contribution) or the one forced by
// the windowed observable sum (used by the second-order sweep).
enum class ForcingKind { Parameter, Windowed };

enum class SolverKind {
  Auto,    // banded
  Banded,  // LAPACK band LU on the interleaved KKT system
  Dense,   // Eigen dense LU; guarded to A*u <= 2000 unknowns
};

// Minimizer of  sum_alpha ( 2 d_alpha^T a_alpha + a_alpha^T C_alpha a_alpha )
// subject to the interface constraints a_alpha = R_alpha a_{alpha-1} + b_alpha
// (alpha = 1..A-1), i.e. the coefficients that cancel the unstable growth of
// the inhomogeneous solution across segments.
struct ShadowingSolution {
  std::vector<Vec> a;            // one u-vector per segment
  std::vector<Vec> multipliers;  // one per interface, alpha = 1..A-1
  double objective = 0.0;
  // max_alpha ||a_alpha - R_alpha a_{alpha-1} - b_alpha|| / (1 + max ||a||)
  double constraint_residual = 0.0;
  // max norm of the Lagrangian gradient rows, relative to the data scale
  double stationarity_residual = 0.0;
};

// Solve the constrained problem for one forcing.  The KKT system is
// assembled in interleaved (a_0, mu_1, a_1, ...) order, which makes it
// symmetric block-tridiagonal with bandwidth 2u-1; it is diagonally
// equilibrated, factored once per call, and iteratively refined against
// extended-precision residuals.  Enforced postconditions (ConditioningError
// otherwise), per interface/segment: constraint residual within
// 1e-8*(1+||a||) plus the double-precision quantization floor
// eps*(|R| ||a|| + ||b|| + ||a||), and stationarity residual within 1e-6
// relative to the gradient's term magnitudes.  Whenever the interface maps
// are modest (||R|| well below ~1e6) the floor is negligible and the plain
// 1e-8 / 1e-6 gates apply.
ShadowingSolution solve_nilss(const std::vector<SegmentRecord>& records,
                              ForcingKind kind,
                              SolverKind solver = SolverKind::Auto);

// Both solves from one factorization (the matrix depends only on C and R,
// so the two forcings are just two right-hand sides).  first = Parameter,
// second = Windowed.
std::pair<ShadowingSolution, ShadowingSolution> solve_nilss_both(
    const std::vector<SegmentRecord>& records,
    SolverKind solver = SolverKind::Auto);

// Time average of grad(phi) . v over the whole run, where within segment
// alpha the reconstructed shadowing direction is v = vp + e a_alpha and the
// per-segment trapezoid sums share interface steps with half weight each.
// The tangent data is replayed segment by segment with the same step kernel
// the sweep used, so no per-step storage is required.
struct ShadowingContribution {
  double value = 0.0;
  std::vector<double> vmax;  // per segment: max ||v|| over its steps
};
ShadowingContribution shadowing_contribution(const MapSystem& sys,
                                             const Observable& obs,
                                             const Orbit& orbit,
                                             const TangentSweep& sweep,
                                             const ShadowingSolution& sol);

}  // namespace linresp
