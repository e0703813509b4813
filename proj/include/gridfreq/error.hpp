#pragma once

#include <stdexcept>
#include <string>

namespace gridfreq {

/// Bad input data: malformed files, violated preconditions, invalid options.
class InputError : public std::invalid_argument {
 public:
  explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

/// A numerical procedure failed (divergence, step-size underflow, ...).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace gridfreq
