#pragma once

#include <stdexcept>
#include <string>

namespace laeids {

// Base class for every recoverable pipeline error.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Errors shared by several modules.
struct EmptyInput : Error {
  using Error::Error;
};
struct LengthMismatch : Error {
  using Error::Error;
};
struct NonFiniteFeature : Error {
  using Error::Error;
};
struct InvalidRange : Error {
  using Error::Error;
};

}  // namespace laeids
