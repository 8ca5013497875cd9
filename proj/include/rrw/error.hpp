#pragma once

#include <stdexcept>
#include <string>

namespace rrw {

// Error taxonomy mapped to CLI exit codes: data errors -> 2, numeric errors -> 3.
enum class ErrorKind {
  format,
  unsupported_orientation,
  unsupported_type,
  io,
  schema,
  duplicate,
  value,
  geometry,
  empty_roi,
  argument,
  insufficient_data,
  unbalanced_design,
  degenerate_data,
  undefined_result,
  collinearity,
  config,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

  // Numeric failures (exit code 3); everything else is a data/usage problem (exit code 2).
  bool numeric() const {
    switch (kind_) {
      case ErrorKind::degenerate_data:
      case ErrorKind::undefined_result:
      case ErrorKind::collinearity:
        return true;
      default:
        return false;
    }
  }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) { throw Error(kind, msg); }

}  // namespace rrw
