#pragma once

#include <stdexcept>
#include <string>

namespace cfid {

// Bad inputs: malformed sequences, inconsistent dimensions, broken configs.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical breakdown: non-PD covariances, non-finite losses and the like.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace cfid
