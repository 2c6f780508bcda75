#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace spinchaos {

enum class ErrorCode {
  invalid_lattice,
  invalid_sector,
  incompatible_mirror,
  invalid_operator,
  dimension_mismatch,
  solver_failure,
  invalid_window,
  degenerate_spectrum,
  invalid_state,
  diagonal_observable,
  invalid_argument,
  io_error,
  fit_error,
  peak_at_edge,
};

std::string_view to_string(ErrorCode code);

/// Exception carrying a machine-readable code next to the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace spinchaos
