#pragma once

#include <stdexcept>
#include <string>

namespace tensorlim {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NotSymmetricError : Error {
  using Error::Error;
};
struct NotPsdError : Error {
  using Error::Error;
};
struct DimensionMismatchError : Error {
  using Error::Error;
};
struct SlotOutOfRangeError : Error {
  using Error::Error;
};
struct QuadratureUnsupportedError : Error {
  using Error::Error;
};
struct BudgetExceededError : Error {
  using Error::Error;
};
struct ShapeMismatchError : Error {
  using Error::Error;
};
struct CountMismatchError : Error {
  using Error::Error;
};
struct ResolutionTooCoarseError : Error {
  using Error::Error;
};
struct SizeExceededError : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace tensorlim
