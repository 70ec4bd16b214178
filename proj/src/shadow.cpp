#include "linresp/shadow.hpp"

#include <lapacke.h>
#ifdef I
#undef I  // <complex.h> leaks this macro through lapacke.h
#endif

#include <cmath>
#include <functional>
#include <limits>

#include "linresp/errors.hpp"

namespace linresp {

namespace {

constexpr long kDenseLimit = 2000;  // max A*u the dense path accepts

// Interleaved KKT layout: unknown block t is a_{t/2} for even t and
// mu_{(t+1)/2} for odd t, each of size u, giving n = (2A-1)*u unknowns with
// bandwidth 2u-1 on both sides.  records[alpha-1] holds R_alpha / b_alpha
// (the interface between segments alpha-1 and alpha); records[alpha] holds
// C_alpha / d_alpha.
struct KktShape {
  long A = 0;
  Eigen::Index u = 0;
  long n = 0;
  long band = 0;  // kl = ku
};

KktShape kkt_shape(const std::vector<SegmentRecord>& records) {
  KktShape s;
  s.A = static_cast<long>(records.size());
  if (s.A < 1) throw ConfigError("shadowing solve: no segment records");
  s.u = records[0].C.rows();
  for (const auto& r : records) {
    if (r.C.rows() != s.u || r.C.cols() != s.u || r.R.rows() != s.u ||
        r.R.cols() != s.u || r.d.size() != s.u || r.dt.size() != s.u ||
        r.b.size() != s.u || r.bt.size() != s.u)
      throw ConfigError("shadowing solve: inconsistent record shapes");
  }
  s.n = (2 * s.A - 1) * s.u;
  s.band = std::min<long>(2 * s.u - 1, s.n - 1);
  return s;
}

// Right-hand side for one forcing: (-d_0, b_1, -d_1, ..., b_{A-1}, -d_{A-1}).
Vec kkt_rhs(const std::vector<SegmentRecord>& records, const KktShape& s,
            ForcingKind kind) {
  Vec rhs = Vec::Zero(s.n);
  for (long alpha = 0; alpha < s.A; ++alpha) {
    const auto& rec = records[static_cast<std::size_t>(alpha)];
    rhs.segment(2 * alpha * s.u, s.u) =
        kind == ForcingKind::Parameter ? -rec.d : -rec.dt;
    if (alpha >= 1) {
      const auto& prev = records[static_cast<std::size_t>(alpha - 1)];
      rhs.segment((2 * alpha - 1) * s.u, s.u) =
          kind == ForcingKind::Parameter ? prev.b : prev.bt;
    }
  }
  return rhs;
}

// Dense assembly of the symmetrically scaled KKT matrix, for the fallback
// path and for cross-checking the banded solver in tests.
Mat kkt_dense(const std::vector<SegmentRecord>& records, const KktShape& s,
              const Vec& dsc) {
  Mat K = Mat::Zero(s.n, s.n);
  const Eigen::Index u = s.u;
  auto scale_block = [&](long i0, long j0) {
    K.block(i0, j0, u, u).array().colwise() *=
        dsc.segment(i0, u).array();
    K.block(i0, j0, u, u).array().rowwise() *=
        dsc.segment(j0, u).array().transpose();
  };
  for (long alpha = 0; alpha < s.A; ++alpha) {
    const auto& rec = records[static_cast<std::size_t>(alpha)];
    const long ra = 2 * alpha * u;  // offset of a_alpha
    K.block(ra, ra, u, u) = rec.C;
    scale_block(ra, ra);
    if (alpha >= 1) {
      const auto& prev = records[static_cast<std::size_t>(alpha - 1)];
      const long rm = (2 * alpha - 1) * u;  // offset of mu_alpha
      K.block(rm, ra - 2 * u, u, u) = -prev.R;
      K.block(ra - 2 * u, rm, u, u) = -prev.R.transpose();
      K.block(rm, ra, u, u) = Mat::Identity(u, u);
      K.block(ra, rm, u, u) = Mat::Identity(u, u);
      scale_block(rm, ra - 2 * u);
      scale_block(ra - 2 * u, rm);
      scale_block(rm, ra);
      scale_block(ra, rm);
    }
  }
  return K;
}

// Per-unknown diagonal scaling for the KKT system.  The Gram blocks grow
// like the squared tangent growth across one segment (~1e19 for the default
// solenoid configuration) while the interface blocks sit near 3e9 and the
// identity couplings at 1; a raw LU factorization of that mix loses the
// solution entirely.  Scaling unknown a_{alpha,i} by 1/sqrt(C_alpha(i,i))
// turns every Gram block into a correlation matrix, and scaling each
// multiplier row so its largest entry is ~1 brings the whole matrix into
// [-1, 1], after which band LU plus iterative refinement recovers the
// solution to working accuracy.
Vec kkt_scaling(const std::vector<SegmentRecord>& records, const KktShape& s) {
  const Eigen::Index u = s.u;
  Vec dsc = Vec::Ones(s.n);
  for (long alpha = 0; alpha < s.A; ++alpha) {
    const auto& rec = records[static_cast<std::size_t>(alpha)];
    if (!rec.C.allFinite() || !rec.R.allFinite() || !rec.d.allFinite() ||
        !rec.dt.allFinite() || !rec.b.allFinite() || !rec.bt.allFinite())
      throw ConditioningError("shadowing solve: non-finite data in segment " +
                              std::to_string(alpha));
    Eigen::LLT<Mat> llt(rec.C);
    if (llt.info() != Eigen::Success)
      throw ConditioningError("shadowing solve: Gram block of segment " +
                              std::to_string(alpha) +
                              " is not positive definite");
    for (Eigen::Index i = 0; i < u; ++i)
      dsc[2 * alpha * u + i] = 1.0 / std::sqrt(rec.C(i, i));
  }
  for (long alpha = 1; alpha < s.A; ++alpha) {
    const auto& R = records[static_cast<std::size_t>(alpha - 1)].R;
    for (Eigen::Index i = 0; i < u; ++i) {
      double m = dsc[2 * alpha * u + i];  // identity coupling to a_alpha
      for (Eigen::Index j = 0; j < u; ++j)
        m = std::max(m, std::abs(R(i, j)) * dsc[2 * (alpha - 1) * u + j]);
      dsc[(2 * alpha - 1) * u + i] = 1.0 / std::max(m, 1e-300);
    }
  }
  return dsc;
}

// Residual of the unscaled KKT equations at z, one column per forcing,
// accumulated in extended precision: the stationarity rows cancel from
// ~1e19-sized terms down to ~1e9, and plain double accumulation would bury
// the digits the optimality gates need to see.
Mat kkt_residual(const std::vector<SegmentRecord>& records, const KktShape& s,
                 const Mat& z) {
  const Eigen::Index u = s.u;
  Mat r(s.n, z.cols());
  for (Eigen::Index col = 0; col < z.cols(); ++col) {
    const bool param = (col == 0);
    for (long alpha = 0; alpha < s.A; ++alpha) {
      const auto& rec = records[static_cast<std::size_t>(alpha)];
      const long ra = 2 * alpha * u;
      for (Eigen::Index i = 0; i < u; ++i) {
        long double acc =
            -static_cast<long double>(param ? rec.d(i) : rec.dt(i));
        for (Eigen::Index j = 0; j < u; ++j)
          acc -= static_cast<long double>(rec.C(i, j)) *
                 static_cast<long double>(z(ra + j, col));
        if (alpha >= 1) acc -= z((2 * alpha - 1) * u + i, col);
        if (alpha + 1 < s.A) {
          const auto& Rn = records[static_cast<std::size_t>(alpha)].R;
          for (Eigen::Index j = 0; j < u; ++j)
            acc += static_cast<long double>(Rn(j, i)) *
                   static_cast<long double>(z((2 * alpha + 1) * u + j, col));
        }
        r(ra + i, col) = static_cast<double>(acc);
      }
      if (alpha >= 1) {
        const auto& prev = records[static_cast<std::size_t>(alpha - 1)];
        const long rm = (2 * alpha - 1) * u;
        for (Eigen::Index i = 0; i < u; ++i) {
          long double acc =
              static_cast<long double>(param ? prev.b(i) : prev.bt(i)) -
              static_cast<long double>(z(ra + i, col));
          for (Eigen::Index j = 0; j < u; ++j)
            acc += static_cast<long double>(prev.R(i, j)) *
                   static_cast<long double>(z(ra - 2 * u + j, col));
          r(rm + i, col) = static_cast<double>(acc);
        }
      }
    }
  }
  return r;
}

using ScaledSolver = std::function<void(Mat&)>;

// Solve K z = rhs given a factorization of the symmetrically scaled matrix
// D K D.  Iterative refinement against the original system reuses the one
// factorization for every correction (and for both forcing columns at once)
// and stops when the scaled residual reaches the roundoff floor of the
// scaled solution or stalls.
Mat solve_refined(const std::vector<SegmentRecord>& records, const KktShape& s,
                  const Vec& dsc, const Mat& rhs,
                  const ScaledSolver& solve_scaled) {
  auto scaled = [&](Mat m) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m.col(c).array() *= dsc.array();
    return m;
  };
  constexpr int kMaxRefine = 6;
  const double eps = std::numeric_limits<double>::epsilon();
  Mat z = scaled(rhs);
  solve_scaled(z);
  z = scaled(z);
  Mat best = z;
  double best_rn = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < kMaxRefine; ++iter) {
    Mat r = kkt_residual(records, s, z);
    const double rn = scaled(r).cwiseAbs().maxCoeff();
    if (!(rn < best_rn)) break;  // stalled (or NaN); keep the best iterate
    best = z;
    best_rn = rn;
    double zs = 0.0;  // norm of the solution in scaled variables
    for (Eigen::Index c = 0; c < z.cols(); ++c)
      zs = std::max(zs, z.col(c).cwiseQuotient(dsc).cwiseAbs().maxCoeff());
    if (rn <= 8.0 * eps * zs) break;
    Mat corr = scaled(r);
    solve_scaled(corr);
    z += scaled(corr);
  }
  return best;
}

// Banded factorization of the scaled KKT matrix via LAPACK's general band
// LU (partial pivoting handles the zero diagonal blocks on the multiplier
// rows); one factorization serves both forcings and all refinement steps.
Mat solve_banded(const std::vector<SegmentRecord>& records, const KktShape& s,
                 const Vec& dsc, const Mat& rhs) {
  const lapack_int n = static_cast<lapack_int>(s.n);
  const lapack_int kl = static_cast<lapack_int>(s.band);
  const lapack_int ku = kl;
  const lapack_int ldab = 2 * kl + ku + 1;
  Eigen::VectorXd ab =
      Eigen::VectorXd::Zero(static_cast<Eigen::Index>(ldab) * n);
  auto set = [&](long i, long j, double v) {
    // column-major LAPACK band storage: AB(kl+ku+i-j, j)
    ab[static_cast<Eigen::Index>(j) * ldab + (kl + ku + i - j)] =
        v * dsc[i] * dsc[j];
  };
  const Eigen::Index u = s.u;
  for (long alpha = 0; alpha < s.A; ++alpha) {
    const auto& rec = records[static_cast<std::size_t>(alpha)];
    const long ra = 2 * alpha * u;
    for (Eigen::Index i = 0; i < u; ++i)
      for (Eigen::Index j = 0; j < u; ++j) set(ra + i, ra + j, rec.C(i, j));
    if (alpha >= 1) {
      const auto& prev = records[static_cast<std::size_t>(alpha - 1)];
      const long rm = (2 * alpha - 1) * u;
      for (Eigen::Index i = 0; i < u; ++i) {
        set(rm + i, ra + i, 1.0);
        set(ra + i, rm + i, 1.0);
        for (Eigen::Index j = 0; j < u; ++j) {
          set(rm + i, ra - 2 * u + j, -prev.R(i, j));
          set(ra - 2 * u + j, rm + i, -prev.R(i, j));
        }
      }
    }
  }
  std::vector<lapack_int> ipiv(static_cast<std::size_t>(n));
  const lapack_int info = LAPACKE_dgbtrf(LAPACK_COL_MAJOR, n, n, kl, ku,
                                         ab.data(), ldab, ipiv.data());
  if (info != 0)
    throw ConditioningError("shadowing solve: band LU failed (LAPACK info = " +
                            std::to_string(info) + ")");
  return solve_refined(records, s, dsc, rhs, [&](Mat& m) {
    const lapack_int rc = LAPACKE_dgbtrs(
        LAPACK_COL_MAJOR, 'N', n, kl, ku, static_cast<lapack_int>(m.cols()),
        ab.data(), ldab, ipiv.data(), m.data(), n);
    if (rc != 0)
      throw ConditioningError(
          "shadowing solve: band back-substitution failed (LAPACK info = " +
          std::to_string(rc) + ")");
  });
}

// Extract (a, multipliers) from a KKT solution vector, attach objective and
// residual diagnostics for the given forcing, and enforce the optimality
// gates.  `res` is the extended-precision residual of the unscaled KKT
// equations at z.  The constraint gate allows, on top of the 1e-8 target,
// the roundoff floor eps*(|R||a| + |b| + |a|) that any double-precision
// coefficient vector carries once the interface maps reach ~1e9: below that
// floor the residual is not measurable in working precision, and the gate
// would otherwise reject exactly-solved systems.
ShadowingSolution package(const std::vector<SegmentRecord>& records,
                          const KktShape& s, ForcingKind kind, const Vec& z,
                          const Vec& res) {
  const Eigen::Index u = s.u;
  ShadowingSolution sol;
  sol.a.resize(static_cast<std::size_t>(s.A));
  sol.multipliers.resize(static_cast<std::size_t>(s.A > 0 ? s.A - 1 : 0));
  for (long alpha = 0; alpha < s.A; ++alpha) {
    sol.a[static_cast<std::size_t>(alpha)] = z.segment(2 * alpha * u, u);
    if (alpha >= 1)
      sol.multipliers[static_cast<std::size_t>(alpha - 1)] =
          z.segment((2 * alpha - 1) * u, u);
  }

  auto d_of = [&](long alpha) -> const Vec& {
    const auto& rec = records[static_cast<std::size_t>(alpha)];
    return kind == ForcingKind::Parameter ? rec.d : rec.dt;
  };
  auto b_of = [&](long alpha) -> const Vec& {  // interface alpha (>= 1)
    const auto& rec = records[static_cast<std::size_t>(alpha - 1)];
    return kind == ForcingKind::Parameter ? rec.b : rec.bt;
  };
  auto R_of = [&](long alpha) -> const Mat& {  // interface alpha (>= 1)
    return records[static_cast<std::size_t>(alpha - 1)].R;
  };

  KahanSum obj;
  double amax = 0.0;
  for (long alpha = 0; alpha < s.A; ++alpha) {
    const Vec& a = sol.a[static_cast<std::size_t>(alpha)];
    const auto& C = records[static_cast<std::size_t>(alpha)].C;
    obj.add(2.0 * d_of(alpha).dot(a) + a.dot(C * a));
    amax = std::max(amax, a.norm());
  }
  sol.objective = obj.value();

  const double eps = std::numeric_limits<double>::epsilon();
  const double roundoff = 8.0 * static_cast<double>(u) * eps;

  double cres = 0.0;
  for (long alpha = 1; alpha < s.A; ++alpha) {
    const double rn = res.segment((2 * alpha - 1) * u, u).norm();
    const Vec& a = sol.a[static_cast<std::size_t>(alpha)];
    const Vec& ap = sol.a[static_cast<std::size_t>(alpha - 1)];
    const double rmax =
        R_of(alpha).size() ? R_of(alpha).cwiseAbs().maxCoeff() : 0.0;
    const double gate = 1e-8 * (1.0 + a.norm()) +
                        roundoff * (rmax * ap.norm() + b_of(alpha).norm() +
                                    a.norm());
    if (!(rn <= gate))
      throw ConditioningError("shadowing solve: interface " +
                              std::to_string(alpha) +
                              " constraint residual " + std::to_string(rn) +
                              " exceeds its tolerance " + std::to_string(gate));
    cres = std::max(cres, rn);
  }
  sol.constraint_residual = cres / (1.0 + amax);

  double sres = 0.0, scale = 1.0;
  for (long alpha = 0; alpha < s.A; ++alpha) {
    const double rn = res.segment(2 * alpha * u, u).norm();
    const Vec& a = sol.a[static_cast<std::size_t>(alpha)];
    const auto& C = records[static_cast<std::size_t>(alpha)].C;
    double sc = 1.0 + d_of(alpha).norm() + (C * a).norm();
    if (alpha >= 1)
      sc += sol.multipliers[static_cast<std::size_t>(alpha - 1)].norm();
    if (alpha + 1 < s.A)
      sc += (R_of(alpha + 1).transpose() *
             sol.multipliers[static_cast<std::size_t>(alpha)])
                .norm();
    if (!(rn <= 1e-6 * sc))
      throw ConditioningError(
          "shadowing solve: segment " + std::to_string(alpha) +
          " stationarity residual " + std::to_string(rn) +
          " exceeds its tolerance " + std::to_string(1e-6 * sc));
    sres = std::max(sres, rn);
    scale = std::max(scale, sc);
  }
  sol.stationarity_residual = sres / scale;
  return sol;
}

// Empty solution for systems with no tracked unstable directions.
std::pair<ShadowingSolution, ShadowingSolution> trivial_pair(long A) {
  ShadowingSolution sol;
  sol.a.assign(static_cast<std::size_t>(A), Vec(0));
  sol.multipliers.assign(static_cast<std::size_t>(A > 0 ? A - 1 : 0), Vec(0));
  return {sol, sol};
}

std::pair<ShadowingSolution, ShadowingSolution> solve_impl(
    const std::vector<SegmentRecord>& records, SolverKind solver) {
  const KktShape s = kkt_shape(records);
  if (s.u == 0) return trivial_pair(s.A);

  const Vec dsc = kkt_scaling(records, s);
  Mat rhs(s.n, 2);
  rhs.col(0) = kkt_rhs(records, s, ForcingKind::Parameter);
  rhs.col(1) = kkt_rhs(records, s, ForcingKind::Windowed);

  Mat z;
  if (solver == SolverKind::Dense) {
    if (s.A * s.u > kDenseLimit)
      throw ConfigError(
          "shadowing solve: problem too large for the dense path (A*u = " +
          std::to_string(s.A * s.u) + " > " + std::to_string(kDenseLimit) +
          ")");
    const Mat K = kkt_dense(records, s, dsc);
    Eigen::PartialPivLU<Mat> lu(K);
    z = solve_refined(records, s, dsc, rhs,
                      [&](Mat& m) { m = lu.solve(m); });
  } else {
    z = solve_banded(records, s, dsc, rhs);
  }
  const Mat res = kkt_residual(records, s, z);
  return {package(records, s, ForcingKind::Parameter, z.col(0), res.col(0)),
          package(records, s, ForcingKind::Windowed, z.col(1), res.col(1))};
}

}  // namespace

ShadowingSolution solve_nilss(const std::vector<SegmentRecord>& records,
                              ForcingKind kind, SolverKind solver) {
  auto both = solve_impl(records, solver);
  return kind == ForcingKind::Parameter ? std::move(both.first)
                                        : std::move(both.second);
}

std::pair<ShadowingSolution, ShadowingSolution> solve_nilss_both(
    const std::vector<SegmentRecord>& records, SolverKind solver) {
  return solve_impl(records, solver);
}

ShadowingContribution shadowing_contribution(const MapSystem& sys,
                                             const Observable& obs,
                                             const Orbit& orbit,
                                             const TangentSweep& sweep,
                                             const ShadowingSolution& sol) {
  const int N = orbit.config().N;
  const long A = static_cast<long>(sweep.records.size());
  if (static_cast<long>(sol.a.size()) != A)
    throw ConfigError(
        "shadowing contribution: solution/segment count mismatch");

  ShadowingContribution out;
  out.vmax.resize(static_cast<std::size_t>(A));
  KahanSum total;
  for (long alpha = 0; alpha < A; ++alpha) {
    TangentState st = segment_start(sweep, alpha);
    const Vec& a = sol.a[static_cast<std::size_t>(alpha)];
    double mx = 0.0;
    for (int n = 0; n <= N; ++n) {
      const long m = alpha * N + n;
      const Vec v = st.vp + st.e * a;
      mx = std::max(mx, v.norm());
      const double w = (n == 0 || n == N) ? 0.5 : 1.0;
      total.add(w * obs.gradient(orbit.state(m)).dot(v));
      if (n < N) tangent_step(sys, orbit, m, &st.e, &st.vp, nullptr);
    }
    out.vmax[static_cast<std::size_t>(alpha)] = mx;
  }
  out.value = total.value() / (static_cast<double>(A) * N);
  return out;
}

}  // namespace linresp
