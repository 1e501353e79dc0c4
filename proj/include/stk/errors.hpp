#pragma once

#include <stdexcept>
#include <string>

namespace stk {

// Bad sizes, out-of-range arguments, malformed input.
class ArgumentError : public std::invalid_argument {
 public:
  explicit ArgumentError(const std::string& msg) : std::invalid_argument(msg) {}
};

// A matrix required to be s.p.d. produced a nonpositive pivot.
class DefinitenessError : public std::runtime_error {
 public:
  explicit DefinitenessError(const std::string& msg) : std::runtime_error(msg) {}
};

// A row/diagonal system inside a structured solve is singular.
class SingularityError : public std::runtime_error {
 public:
  explicit SingularityError(const std::string& msg) : std::runtime_error(msg) {}
};

// A diagonalized two-term equation has a zero or negative pivot lambda_i + theta_j.
class SolvabilityError : public std::runtime_error {
 public:
  explicit SolvabilityError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite values encountered during an iteration.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad command line or config file.
class UsageError : public std::runtime_error {
 public:
  explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace stk
