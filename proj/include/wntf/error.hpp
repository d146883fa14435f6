#pragma once

#include <stdexcept>
#include <string>

namespace wntf {

// Raised when an iterate picks up a NaN or Inf. The message carries enough
// context (operation, mode, iteration) to locate the failure.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent on-disk data.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace wntf
