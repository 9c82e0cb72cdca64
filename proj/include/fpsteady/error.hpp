#pragma once

#include <stdexcept>
#include <string>

namespace fpsteady {

// Every failure class maps to a distinct process exit code (see CLI --help).
enum class ErrorClass {
  config = 2,
  parameter = 3,
  io = 4,
  spec_mismatch = 5,
  degenerate_grid = 6,
  rank_deficient = 7,
  non_convergence = 8,
  diverged_trajectory = 9,
  empty_histogram = 10,
  empty_density = 11,
  overlap = 12,
  unsupported = 13,
};

const char* error_class_name(ErrorClass cls);

class FpError : public std::runtime_error {
 public:
  FpError(ErrorClass cls, const std::string& msg)
      : std::runtime_error(msg), cls_(cls) {}

  ErrorClass cls() const { return cls_; }
  int exit_code() const { return static_cast<int>(cls_); }

 private:
  ErrorClass cls_;
};

[[noreturn]] void fail(ErrorClass cls, const std::string& msg);

}  // namespace fpsteady
