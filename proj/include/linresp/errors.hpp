#pragma once

#include <stdexcept>
#include <string>

namespace linresp {

// Malformed configuration: unknown keys, out-of-range or inconsistent values,
// dimension mismatches between a system and the data fed to it.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A trajectory or tangent quantity left the representable range (NaN/Inf).
// `step` is the global step index at which the value went bad (see Orbit for
// the indexing convention); negative spin-up steps are reported as such in
// the message.
struct BlowupError : std::runtime_error {
  long step;
  BlowupError(const std::string& what, long step_index)
      : std::runtime_error(what), step(step_index) {}
};

// A factorization or renormalization lost rank or failed a numerical
// consistency guard (degenerate tangent basis, solver failure, residuals
// above tolerance).
struct ConditioningError : std::runtime_error {
  explicit ConditioningError(const std::string& what)
      : std::runtime_error(what) {}
};

}  // namespace linresp
