#pragma once

#include <stdexcept>
#include <string>

namespace kerdisc {

/// Thrown when a sample file cannot be parsed; message names the offending line.
class parse_error : public std::runtime_error {
 public:
  parse_error(const std::string& what, std::size_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Thrown when an estimator or flow produces a non-finite value.
class numerical_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown for operations a given kernel/prior kind does not support.
class unsupported_operation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace kerdisc
