#pragma once

#include <string>
#include <vector>

#include "linresp/model.hpp"

namespace linresp {

// Three-dimensional skew-product test map: one dissipative coordinate driven
// by two expanding circle coordinates (u = 2).  The parameter gamma couples
// the dissipative coordinate back into the circle dynamics.
//
//   x1' = 0.05 x1 + 0.1 cos(8 x2) - 0.1 sin(5 x3)
//   x2' = 2 x2 + gamma (1 + x1) sin(8 x2)   (mod 2 pi)
//   x3' = 3 x3 + gamma (1 + x1) cos(2 x3)   (mod 2 pi)
//
// Default observable: the dissipative coordinate x1.
MapSystem make_solenoid();

// One-dimensional affine contraction x' = 0.5 x + gamma (u = 0).  Its
// stationary measure is the point mass at x* = 2 gamma, so for the default
// observable phi(x) = x the long-run average is 2 gamma exactly and its
// parameter derivative is exactly 2.  Used as an analytically solvable
// end-to-end check.
MapSystem make_contracting_affine();
double contracting_affine_mean(double gamma);  // 2 gamma
double contracting_affine_derivative();        // 2

// Uniformly expanding circle map x' = 2 x + gamma sin(x) (mod 2 pi) with
// u = M = 1.  Default observable phi(x) = cos(x).
MapSystem make_expanding_circle();

// Observable phi(x) = x[index] with constant gradient.
Observable coordinate_observable(int dim, int index,
                                 const std::string& name = "");
// Observable phi(x) = cos(x[0]) for one-dimensional systems.
Observable cosine_observable();

// A system together with its default observable, as served by the registry.
struct NamedSystem {
  MapSystem system;
  Observable observable;
};

// Look up a built-in system by registered name ("solenoid",
// "contracting_affine", "expanding_circle").  Throws ConfigError for unknown
// names, listing the valid ones.
NamedSystem make_named_system(const std::string& name);
std::vector<std::string> builtin_system_names();

}  // namespace linresp
