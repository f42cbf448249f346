#pragma once

#include <stdexcept>
#include <string>

namespace kmc {

/// Bad user input (config file, CLI flags, incompatible options). Exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A runtime invariant failed (negative rate, catalog out of sync, ...).
/// Exit code 3. These checks stay on in release builds.
struct InvariantError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void check(bool ok, const std::string& what) {
  if (!ok) throw InvariantError(what);
}

}  // namespace kmc
