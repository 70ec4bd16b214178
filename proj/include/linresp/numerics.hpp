#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace linresp {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Kahan-compensated scalar accumulator.  Used wherever long sums feed a
// quantity with a tight tolerance (trapezoid accumulations, trace averages,
// empirical means).
class KahanSum {
 public:
  void add(double x) {
    const double y = x - c_;
    const double t = sum_ + y;
    c_ = (t - sum_) - y;
    sum_ = t;
  }
  double value() const { return sum_; }

 private:
  double sum_ = 0.0;
  double c_ = 0.0;
};

// Elementwise Kahan accumulator for a fixed-shape matrix (or vector).
class KahanMat {
 public:
  KahanMat(Eigen::Index rows, Eigen::Index cols)
      : sum_(Mat::Zero(rows, cols)), c_(Mat::Zero(rows, cols)) {}
  void add(const Mat& x) {
    const Mat y = x - c_;
    const Mat t = sum_ + y;
    c_ = (t - sum_) - y;
    sum_ = t;
  }
  const Mat& value() const { return sum_; }

 private:
  Mat sum_, c_;
};

// Thin QR factorization a = Q R with the convention diag(R) >= 0.
// Q is a->rows() x a->cols() with orthonormal columns, R is square upper
// triangular.  Zero-column inputs yield empty factors.
struct ThinQr {
  Mat Q, R;
};
ThinQr qr_positive(const Mat& a);

// Difference a - b taken per coordinate.  Coordinates with period > 0 are
// compared on the circle: the result is reduced to (-period/2, period/2].
// Non-periodic coordinates (period <= 0) subtract directly.
Vec wrapped_difference(const Vec& a, const Vec& b,
                       const std::vector<double>& periods);

// Wrap each periodic coordinate of x into [0, period).
void wrap_state(Vec& x, const std::vector<double>& periods);

// Deterministic seed derivation (splitmix64 over base + index).  Used for
// replica and grid-point seeds so that any sub-run can be reproduced from the
// seed echoed in the output.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t index);

// Matrix with i.i.d. standard normal entries, filled column-major from a
// seeded generator (deterministic for a fixed seed and build).
Mat gaussian_matrix(std::uint64_t seed, Eigen::Index rows, Eigen::Index cols);

// Vector drawn uniformly from the box [lo, hi) per coordinate.
Vec uniform_in_box(std::uint64_t seed, const Vec& lo, const Vec& hi);

// Ordinary least squares fit y ~ intercept + slope * x with the standard
// error of the slope estimated from the residuals (n must be >= 3 for the
// standard error to be defined; otherwise it is set to 0).
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  int n = 0;
};
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

// Weighted least squares with weights w (e.g. inverse variances); the slope
// standard error is scaled by the square root of the reduced chi-square.
LineFit fit_line_weighted(const std::vector<double>& x,
                          const std::vector<double>& y,
                          const std::vector<double>& w);

// Sample mean and standard deviation (n-1 normalization; std = 0 for n < 2).
struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
  int n = 0;
};
MeanStd mean_std(const std::vector<double>& xs);

// FNV-1a 64-bit hash, used to stamp outputs with a config fingerprint.
std::uint64_t fnv1a64(const std::string& s);

}  // namespace linresp
