#pragma once

#include <stdexcept>
#include <string>

namespace bowtie {

// Invalid user-facing input: a parameter violates its documented range.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

// A computation could not produce a trustworthy result (ill-posed solve, drift, cutoff).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace bowtie
