#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace qpr {

struct CheckResult {
  std::string module;
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

struct SelfCheckReport {
  std::vector<CheckResult> checks;
  bool all_pass() const;
};

// invariant and property checks of every module on small seeded instances
SelfCheckReport run_selfcheck(std::uint64_t seed);

}  // namespace qpr
