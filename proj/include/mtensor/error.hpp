#pragma once

#include <stdexcept>

namespace mtensor {

// Incompatible dimensions between operands, or an invalid shape.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A transform was requested at a size it cannot be built for (e.g. Haar at n = 6).
class UnsupportedSize : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed or truncated input file.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A numerical routine failed or produced a result outside its contract.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mtensor
