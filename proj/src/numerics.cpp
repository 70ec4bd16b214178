#include "linresp/numerics.hpp"

#include <cmath>
#include <random>

#include "linresp/errors.hpp"

namespace linresp {

ThinQr qr_positive(const Mat& a) {
  const Eigen::Index m = a.rows(), n = a.cols();
  if (n == 0) return {Mat(m, 0), Mat(0, 0)};
  Eigen::HouseholderQR<Mat> qr(a);
  Mat q = qr.householderQ() * Mat::Identity(m, n);
  Mat r = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
  // Fix the sign convention: flip columns of Q (and rows of R) so that the
  // diagonal of R is non-negative.
  for (Eigen::Index j = 0; j < n; ++j) {
    if (r(j, j) < 0) {
      q.col(j) = -q.col(j);
      r.row(j) = -r.row(j);
    }
  }
  return {std::move(q), std::move(r)};
}

Vec wrapped_difference(const Vec& a, const Vec& b,
                       const std::vector<double>& periods) {
  Vec d = a - b;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    const double p = i < static_cast<Eigen::Index>(periods.size())
                         ? periods[static_cast<std::size_t>(i)]
                         : 0.0;
    if (p > 0) {
      d[i] = std::remainder(d[i], p);
      if (d[i] <= -p / 2) d[i] += p;  // remainder returns [-p/2, p/2]
    }
  }
  return d;
}

void wrap_state(Vec& x, const std::vector<double>& periods) {
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double p = i < static_cast<Eigen::Index>(periods.size())
                         ? periods[static_cast<std::size_t>(i)]
                         : 0.0;
    if (p > 0) {
      x[i] = std::fmod(x[i], p);
      if (x[i] < 0) x[i] += p;
    }
  }
}

namespace {
std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}
}  // namespace

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t index) {
  std::uint64_t s = base + 0x9E3779B97F4A7C15ull * (index + 1);
  return splitmix64(s);
}

Mat gaussian_matrix(std::uint64_t seed, Eigen::Index rows, Eigen::Index cols) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Mat m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  return m;
}

Vec uniform_in_box(std::uint64_t seed, const Vec& lo, const Vec& hi) {
  if (lo.size() != hi.size())
    throw ConfigError("uniform_in_box: box bounds have mismatched sizes");
  std::mt19937_64 rng(seed);
  Vec x(lo.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!(hi[i] >= lo[i]))
      throw ConfigError("uniform_in_box: empty box on coordinate " +
                        std::to_string(i));
    std::uniform_real_distribution<double> uni(lo[i], hi[i]);
    x[i] = uni(rng);
  }
  return x;
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> w(x.size(), 1.0);
  return fit_line_weighted(x, y, w);
}

LineFit fit_line_weighted(const std::vector<double>& x,
                          const std::vector<double>& y,
                          const std::vector<double>& w) {
  if (x.size() != y.size() || x.size() != w.size())
    throw ConfigError("fit_line: mismatched input lengths");
  const int n = static_cast<int>(x.size());
  if (n < 2) throw ConfigError("fit_line: need at least 2 points");

  KahanSum sw, swx, swy;
  for (int i = 0; i < n; ++i) {
    sw.add(w[i]);
    swx.add(w[i] * x[i]);
    swy.add(w[i] * y[i]);
  }
  const double xbar = swx.value() / sw.value();
  const double ybar = swy.value() / sw.value();

  KahanSum sxx, sxy;
  for (int i = 0; i < n; ++i) {
    sxx.add(w[i] * (x[i] - xbar) * (x[i] - xbar));
    sxy.add(w[i] * (x[i] - xbar) * (y[i] - ybar));
  }
  if (sxx.value() <= 0)
    throw ConfigError("fit_line: degenerate abscissae (zero spread)");

  LineFit fit;
  fit.n = n;
  fit.slope = sxy.value() / sxx.value();
  fit.intercept = ybar - fit.slope * xbar;

  if (n >= 3) {
    KahanSum rss;
    for (int i = 0; i < n; ++i) {
      const double r = y[i] - fit.intercept - fit.slope * x[i];
      rss.add(w[i] * r * r);
    }
    const double s2 = rss.value() / (n - 2);
    fit.slope_stderr = std::sqrt(s2 / sxx.value());
  }
  return fit;
}

MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd out;
  out.n = static_cast<int>(xs.size());
  if (out.n == 0) return out;
  KahanSum s;
  for (double v : xs) s.add(v);
  out.mean = s.value() / out.n;
  if (out.n >= 2) {
    KahanSum ss;
    for (double v : xs) ss.add((v - out.mean) * (v - out.mean));
    out.std = std::sqrt(ss.value() / (out.n - 1));
  }
  return out;
}

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

}  // namespace linresp
