#include "fpsteady/error.hpp"

namespace fpsteady {

const char* error_class_name(ErrorClass cls) {
  switch (cls) {
    case ErrorClass::config:
      return "config";
    case ErrorClass::parameter:
      return "parameter";
    case ErrorClass::io:
      return "io";
    case ErrorClass::spec_mismatch:
      return "spec-mismatch";
    case ErrorClass::degenerate_grid:
      return "degenerate-grid";
    case ErrorClass::rank_deficient:
      return "rank-deficient";
    case ErrorClass::non_convergence:
      return "non-convergence";
    case ErrorClass::diverged_trajectory:
      return "diverged-trajectory";
    case ErrorClass::empty_histogram:
      return "empty-histogram";
    case ErrorClass::empty_density:
      return "empty-density";
    case ErrorClass::overlap:
      return "overlap";
    case ErrorClass::unsupported:
      return "unsupported";
  }
  return "unknown";
}

void fail(ErrorClass cls, const std::string& msg) { throw FpError(cls, msg); }

}  // namespace fpsteady
