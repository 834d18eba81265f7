#pragma once

#include <string>

#include "corrugate/pipeline.hpp"

namespace corrugate {

/// Everything a run needs.  Parsed from flat `key = value` text.
struct RunConfig {
  ScheduleParams schedule;
  MetricSpec metric;
  PipelineOptions options;
  int grid = 1024;          // lattice cells per unit length
  double omega_lo = 0.0;    // Omega = [omega_lo, omega_hi]^n
  double omega_hi = 1.0;
  std::string out = "out";  // output directory, must exist
  bool snapshots = true;
};

/// Rejects unknown keys, malformed values and invalid schedules (config-invalid,
/// invalid-exponent, invalid-rate).
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Schedule and inputs derived from a validated config.
Schedule config_schedule(const RunConfig& c);
RunInputs config_inputs(const RunConfig& c);

/// Canonical text form; parse_config(to_text(c)) reproduces c.
std::string to_text(const RunConfig& c);

}  // namespace corrugate
