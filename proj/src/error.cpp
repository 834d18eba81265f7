#include "corrugate/error.hpp"

namespace corrugate {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::domain_too_small: return "domain-too-small";
    case ErrorKind::misaligned_lattice: return "misaligned-lattice";
    case ErrorKind::non_finite: return "non-finite";
    case ErrorKind::index_out_of_range: return "index-out-of-range";
    case ErrorKind::ill_posed_direction: return "ill-posed-direction";
    case ErrorKind::iteration_diverged: return "iteration-diverged";
    case ErrorKind::precondition_violated: return "precondition-violated";
    case ErrorKind::nonzero_mean_input: return "nonzero-mean-input";
    case ErrorKind::degenerate_jacobian: return "degenerate-jacobian";
    case ErrorKind::under_resolved_grid: return "under-resolved-grid";
    case ErrorKind::certificate_missing: return "certificate-missing";
    case ErrorKind::certificate_degraded: return "certificate-degraded";
    case ErrorKind::term_count_overflow: return "term-count-overflow";
    case ErrorKind::not_short: return "not-short";
    case ErrorKind::budget_exceeded: return "budget-exceeded";
    case ErrorKind::amplitude_underflow: return "amplitude-underflow";
    case ErrorKind::invalid_exponent: return "invalid-exponent";
    case ErrorKind::invalid_rate: return "invalid-rate";
    case ErrorKind::config_invalid: return "config-invalid";
    case ErrorKind::io_error: return "io-error";
    case ErrorKind::wrong_dimension: return "wrong-dimension";
    case ErrorKind::suite_unknown: return "suite-unknown";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace corrugate
