#include "spinchaos/error.hpp"

namespace spinchaos {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_lattice: return "invalid_lattice";
    case ErrorCode::invalid_sector: return "invalid_sector";
    case ErrorCode::incompatible_mirror: return "incompatible_mirror";
    case ErrorCode::invalid_operator: return "invalid_operator";
    case ErrorCode::dimension_mismatch: return "dimension_mismatch";
    case ErrorCode::solver_failure: return "solver_failure";
    case ErrorCode::invalid_window: return "invalid_window";
    case ErrorCode::degenerate_spectrum: return "degenerate_spectrum";
    case ErrorCode::invalid_state: return "invalid_state";
    case ErrorCode::diagonal_observable: return "diagonal_observable";
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::io_error: return "io_error";
    case ErrorCode::fit_error: return "fit_error";
    case ErrorCode::peak_at_edge: return "peak_at_edge";
  }
  return "unknown";
}

}  // namespace spinchaos
