#pragma once

#include <stdexcept>
#include <string>

namespace pwb {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// X'X below the eigenvalue tolerance, or propagated from a downstream inverse.
struct SingularDesign : Error {
  using Error::Error;
};

// User-supplied distance matrix yields a kernel with eigenvalues < -1e-6.
struct NotPositiveSemiDefinite : Error {
  using Error::Error;
};

// Near-unit-root or constant score series in the serial plug-in rule.
struct DegenerateAutocorrelation : Error {
  using Error::Error;
};

// Gram matrix identically zero while its indicator is active.
struct SingularGram : Error {
  using Error::Error;
};

struct ParseError : Error {
  using Error::Error;
};

}  // namespace pwb
