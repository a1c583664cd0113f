#pragma once

#include <stdexcept>
#include <string>

namespace swgauge {

// Base for everything the library throws on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input or a violated precondition. The CLI maps this to exit code 2.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// A numerical procedure could not produce a trustworthy value (density
// underflow, solver non-convergence). The CLI maps this to exit code 3.
class NumericFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace swgauge
