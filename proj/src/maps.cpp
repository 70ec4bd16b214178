#include "linresp/maps.hpp"

#include <cmath>

#include "linresp/errors.hpp"

namespace linresp {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

MapSystem make_solenoid() {
  MapSystem sys;
  sys.name = "solenoid";
  sys.dim = 3;
  sys.unstable_dim = 2;
  sys.periods = {0.0, kTwoPi, kTwoPi};
  sys.init_lo = Vec::Zero(3);
  sys.init_hi = (Vec(3) << 1.0, kTwoPi, kTwoPi).finished();

  sys.step = [](const Vec& x, double g) {
    Vec y(3);
    y[0] = 0.05 * x[0] + 0.1 * std::cos(8 * x[1]) - 0.1 * std::sin(5 * x[2]);
    y[1] = 2 * x[1] + g * (1 + x[0]) * std::sin(8 * x[1]);
    y[2] = 3 * x[2] + g * (1 + x[0]) * std::cos(2 * x[2]);
    y[1] = std::fmod(y[1], kTwoPi);
    if (y[1] < 0) y[1] += kTwoPi;
    y[2] = std::fmod(y[2], kTwoPi);
    if (y[2] < 0) y[2] += kTwoPi;
    return y;
  };
  sys.jacobian_vector = [](const Vec& x, double g, const Vec& w) {
    Vec y(3);
    y[0] = 0.05 * w[0] - 0.8 * std::sin(8 * x[1]) * w[1] -
           0.5 * std::cos(5 * x[2]) * w[2];
    y[1] = g * std::sin(8 * x[1]) * w[0] +
           (2 + 8 * g * (1 + x[0]) * std::cos(8 * x[1])) * w[1];
    y[2] = g * std::cos(2 * x[2]) * w[0] +
           (3 - 2 * g * (1 + x[0]) * std::sin(2 * x[2])) * w[2];
    return y;
  };
  sys.hessian_vector_vector = [](const Vec& x, double g, const Vec& y,
                                 const Vec& w) {
    Vec h(3);
    h[0] = -6.4 * std::cos(8 * x[1]) * y[1] * w[1] +
           2.5 * std::sin(5 * x[2]) * y[2] * w[2];
    h[1] = 8 * g * std::cos(8 * x[1]) * (y[0] * w[1] + y[1] * w[0]) -
           64 * g * (1 + x[0]) * std::sin(8 * x[1]) * y[1] * w[1];
    h[2] = -2 * g * std::sin(2 * x[2]) * (y[0] * w[2] + y[2] * w[0]) -
           4 * g * (1 + x[0]) * std::cos(2 * x[2]) * y[2] * w[2];
    return h;
  };
  sys.param_vector = [](const Vec& x, double) {
    Vec d(3);
    d[0] = 0.0;
    d[1] = (1 + x[0]) * std::sin(8 * x[1]);
    d[2] = (1 + x[0]) * std::cos(2 * x[2]);
    return d;
  };
  sys.param_vector_jacobian = [](const Vec& x, double, const Vec& w) {
    Vec d(3);
    d[0] = 0.0;
    d[1] = std::sin(8 * x[1]) * w[0] +
           8 * (1 + x[0]) * std::cos(8 * x[1]) * w[1];
    d[2] = std::cos(2 * x[2]) * w[0] -
           2 * (1 + x[0]) * std::sin(2 * x[2]) * w[2];
    return d;
  };
  return sys;
}

MapSystem make_contracting_affine() {
  MapSystem sys;
  sys.name = "contracting_affine";
  sys.dim = 1;
  sys.unstable_dim = 0;
  sys.periods = {0.0};
  sys.init_lo = Vec::Zero(1);
  sys.init_hi = Vec::Ones(1);

  sys.step = [](const Vec& x, double g) {
    return Vec::Constant(1, 0.5 * x[0] + g).eval();
  };
  sys.jacobian_vector = [](const Vec&, double, const Vec& w) {
    return (0.5 * w).eval();
  };
  sys.hessian_vector_vector = [](const Vec&, double, const Vec&, const Vec&) {
    return Vec::Zero(1).eval();
  };
  sys.param_vector = [](const Vec&, double) { return Vec::Ones(1).eval(); };
  sys.param_vector_jacobian = [](const Vec&, double, const Vec&) {
    return Vec::Zero(1).eval();
  };
  return sys;
}

double contracting_affine_mean(double gamma) { return 2.0 * gamma; }
double contracting_affine_derivative() { return 2.0; }

MapSystem make_expanding_circle() {
  MapSystem sys;
  sys.name = "expanding_circle";
  sys.dim = 1;
  sys.unstable_dim = 1;
  sys.periods = {kTwoPi};
  sys.init_lo = Vec::Zero(1);
  sys.init_hi = Vec::Constant(1, kTwoPi);

  sys.step = [](const Vec& x, double g) {
    double y = 2 * x[0] + g * std::sin(x[0]);
    y = std::fmod(y, kTwoPi);
    if (y < 0) y += kTwoPi;
    return Vec::Constant(1, y).eval();
  };
  sys.jacobian_vector = [](const Vec& x, double g, const Vec& w) {
    return ((2 + g * std::cos(x[0])) * w).eval();
  };
  sys.hessian_vector_vector = [](const Vec& x, double g, const Vec& y,
                                 const Vec& w) {
    return (-g * std::sin(x[0]) * y[0] * w).eval();
  };
  sys.param_vector = [](const Vec& x, double) {
    return Vec::Constant(1, std::sin(x[0])).eval();
  };
  sys.param_vector_jacobian = [](const Vec& x, double, const Vec& w) {
    return (std::cos(x[0]) * w).eval();
  };
  return sys;
}

Observable coordinate_observable(int dim, int index, const std::string& name) {
  if (index < 0 || index >= dim)
    throw ConfigError("coordinate_observable: index out of range");
  Observable obs;
  obs.name = name.empty() ? ("x" + std::to_string(index + 1)) : name;
  obs.value = [index](const Vec& x) { return x[index]; };
  obs.gradient = [dim, index](const Vec&) {
    Vec g = Vec::Zero(dim);
    g[index] = 1.0;
    return g;
  };
  return obs;
}

Observable cosine_observable() {
  Observable obs;
  obs.name = "cos_x1";
  obs.value = [](const Vec& x) { return std::cos(x[0]); };
  obs.gradient = [](const Vec& x) {
    return Vec::Constant(1, -std::sin(x[0])).eval();
  };
  return obs;
}

NamedSystem make_named_system(const std::string& name) {
  if (name == "solenoid")
    return {make_solenoid(), coordinate_observable(3, 0)};
  if (name == "contracting_affine")
    return {make_contracting_affine(), coordinate_observable(1, 0)};
  if (name == "expanding_circle")
    return {make_expanding_circle(), cosine_observable()};
  std::string valid;
  for (const auto& n : builtin_system_names()) {
    if (!valid.empty()) valid += ", ";
    valid += n;
  }
  throw ConfigError("unknown system '" + name + "' (valid: " + valid + ")");
}

std::vector<std::string> builtin_system_names() {
  return {"solenoid", "contracting_affine", "expanding_circle"};
}

}  // namespace linresp
