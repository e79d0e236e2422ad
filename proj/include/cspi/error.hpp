#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cspi {

/// Failure categories raised by the library. The CLI maps these onto exit codes.
enum class ErrorKind {
  invalid_argument,
  grid_too_narrow,
  grid_mismatch,
  under_resolved_grid,
  zero_total_rate,
  no_extrema,
  nonpositive_spacing,
  insufficient_samples,
  insufficient_scan_range,
  zero_signal,
  parse,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string &what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string &what) { throw Error(kind, what); }

inline void require(bool condition, ErrorKind kind, const std::string &what) {
  if (!condition) fail(kind, what);
}

} // namespace cspi
