#include "linresp/model.hpp"

#include <cmath>
#include <sstream>

#include "linresp/errors.hpp"

namespace linresp {

namespace {

constexpr double kFdStep = 1e-6;

// Relative discrepancy between a finite-difference estimate and the analytic
// value: ||fd - exact|| / max(1, ||exact||, ||fd||).
double rel_discrepancy(const Vec& fd, const Vec& exact) {
  const double scale = std::max({1.0, exact.norm(), fd.norm()});
  return (fd - exact).norm() / scale;
}

void require_dim(const Vec& v, int dim, const char* what) {
  if (v.size() != dim) {
    std::ostringstream os;
    os << what << " returned a vector of size " << v.size()
       << ", expected the state dimension " << dim;
    throw ConfigError(os.str());
  }
  if (!v.allFinite())
    throw BlowupError(std::string(what) + " returned a non-finite value", -1);
}

}  // namespace

bool ValidationReport::ok() const { return worst() <= tolerance; }

double ValidationReport::worst() const {
  return std::max({jacobian_vector, hessian_vector_vector, param_vector,
                   param_vector_jacobian, observable_gradient});
}

std::string ValidationReport::summary() const {
  std::ostringstream os;
  auto line = [&](const char* name, double v) {
    os << name << ": max relative discrepancy " << v << " -> "
       << (v <= tolerance ? "PASS" : "FLAG") << "\n";
  };
  line("jacobian_vector", jacobian_vector);
  line("hessian_vector_vector", hessian_vector_vector);
  line("param_vector", param_vector);
  line("param_vector_jacobian", param_vector_jacobian);
  line("observable_gradient", observable_gradient);
  return os.str();
}

void check_system_shape(const MapSystem& sys) {
  if (sys.dim < 1)
    throw ConfigError("system '" + sys.name + "': dim must be >= 1");
  if (sys.unstable_dim < 0 || sys.unstable_dim > sys.dim)
    throw ConfigError("system '" + sys.name +
                      "': unstable_dim must lie in [0, dim]");
  if (static_cast<int>(sys.periods.size()) != sys.dim)
    throw ConfigError("system '" + sys.name + "': periods size != dim");
  if (sys.init_lo.size() != sys.dim || sys.init_hi.size() != sys.dim)
    throw ConfigError("system '" + sys.name + "': initial box size != dim");
  if (!sys.step || !sys.jacobian_vector || !sys.hessian_vector_vector ||
      !sys.param_vector || !sys.param_vector_jacobian)
    throw ConfigError("system '" + sys.name + "': missing callback");
}

ValidationReport validate_system(const MapSystem& sys, const Observable& obs,
                                 double gamma, int probes,
                                 std::uint64_t seed) {
  check_system_shape(sys);
  if (!obs.value || !obs.gradient)
    throw ConfigError("observable '" + obs.name + "': missing callback");
  if (probes < 1) throw ConfigError("validate_system: probes must be >= 1");

  ValidationReport rep;
  rep.probes = probes;
  const int M = sys.dim;

  for (int p = 0; p < probes; ++p) {
    // Draw a probe state and run it a few steps so the checks sample the
    // region the pipeline actually visits.
    Vec x = uniform_in_box(mix_seed(seed, 2 * p), sys.init_lo, sys.init_hi);
    wrap_state(x, sys.periods);
    for (int k = 0; k < 8; ++k) {
      x = sys.step(x, gamma);
      require_dim(x, M, "step");
    }

    const Mat dirs = gaussian_matrix(mix_seed(seed, 2 * p + 1), M, 2);
    const Vec w = dirs.col(0).normalized();
    const Vec y = dirs.col(1).normalized();

    // jacobian_vector against a central difference of step.  Step output is
    // wrapped, so differences are taken on the circle per coordinate.
    {
      const Vec exact = sys.jacobian_vector(x, gamma, w);
      require_dim(exact, M, "jacobian_vector");
      const Vec fp = sys.step(x + kFdStep * w, gamma);
      const Vec fm = sys.step(x - kFdStep * w, gamma);
      const Vec fd = wrapped_difference(fp, fm, sys.periods) / (2 * kFdStep);
      rep.jacobian_vector =
          std::max(rep.jacobian_vector, rel_discrepancy(fd, exact));
    }

    // hessian_vector_vector against a central difference of jacobian_vector
    // in the state.  Tangent outputs are unwrapped, so plain differences.
    {
      const Vec exact = sys.hessian_vector_vector(x, gamma, y, w);
      require_dim(exact, M, "hessian_vector_vector");
      const Vec jp = sys.jacobian_vector(x + kFdStep * y, gamma, w);
      const Vec jm = sys.jacobian_vector(x - kFdStep * y, gamma, w);
      const Vec fd = (jp - jm) / (2 * kFdStep);
      rep.hessian_vector_vector =
          std::max(rep.hessian_vector_vector, rel_discrepancy(fd, exact));
    }

    // param_vector against a central difference of step in gamma.
    {
      const Vec exact = sys.param_vector(x, gamma);
      require_dim(exact, M, "param_vector");
      const Vec fp = sys.step(x, gamma + kFdStep);
      const Vec fm = sys.step(x, gamma - kFdStep);
      const Vec fd = wrapped_difference(fp, fm, sys.periods) / (2 * kFdStep);
      rep.param_vector =
          std::max(rep.param_vector, rel_discrepancy(fd, exact));
    }

    // param_vector_jacobian against a central difference of param_vector in
    // the state.
    {
      const Vec exact = sys.param_vector_jacobian(x, gamma, w);
      require_dim(exact, M, "param_vector_jacobian");
      const Vec pp = sys.param_vector(x + kFdStep * w, gamma);
      const Vec pm = sys.param_vector(x - kFdStep * w, gamma);
      const Vec fd = (pp - pm) / (2 * kFdStep);
      rep.param_vector_jacobian =
          std::max(rep.param_vector_jacobian, rel_discrepancy(fd, exact));
    }

    // Observable gradient against a central difference of the value.
    {
      const Vec exact = obs.gradient(x);
      require_dim(exact, M, "observable_gradient");
      const double fp = obs.value(x + kFdStep * w);
      const double fm = obs.value(x - kFdStep * w);
      const double fd = (fp - fm) / (2 * kFdStep);
      const double directional = exact.dot(w);
      const double scale =
          std::max({1.0, std::abs(directional), std::abs(fd)});
      rep.observable_gradient =
          std::max(rep.observable_gradient, std::abs(fd - directional) / scale);
    }
  }

  return rep;
}

}  // namespace linresp
