#pragma once

#include <stdexcept>
#include <string>

namespace corrugate {

enum class ErrorKind {
  domain_too_small,
  misaligned_lattice,
  non_finite,
  index_out_of_range,
  ill_posed_direction,
  iteration_diverged,
  precondition_violated,
  nonzero_mean_input,
  degenerate_jacobian,
  under_resolved_grid,
  certificate_missing,
  certificate_degraded,
  term_count_overflow,
  not_short,
  budget_exceeded,
  amplitude_underflow,
  invalid_exponent,
  invalid_rate,
  config_invalid,
  io_error,
  wrong_dimension,
  suite_unknown,
};

const char* to_string(ErrorKind kind);

/// Library exception carrying a machine-readable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

}  // namespace corrugate
