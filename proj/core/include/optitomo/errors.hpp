#pragma once

#include <stdexcept>
#include <string>

namespace optitomo {

/// Bad input: malformed meshes, out-of-range indices, non-positive coefficients.
class InvalidInput : public std::invalid_argument {
 public:
  explicit InvalidInput(const std::string& what) : std::invalid_argument(what) {}
};

/// A numerical procedure did not deliver its post-condition (solver residual,
/// CG without certificate, line-search breakdown surfaced as an error).
class NumericalFailure : public std::runtime_error {
 public:
  explicit NumericalFailure(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace optitomo
