#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace corrugate {

struct PropertyResult {
  std::string suite;
  std::string name;
  double measured = 0.0;
  double bound = 0.0;
  bool pass = false;
  std::string detail;
};

const std::vector<std::string>& suite_names();

/// Runs one suite ("all" runs every suite), printing one line per property.
/// suite-unknown for any other name.
std::vector<PropertyResult> run_suite(const std::string& suite, std::uint64_t seed, std::ostream& out);

}  // namespace corrugate
