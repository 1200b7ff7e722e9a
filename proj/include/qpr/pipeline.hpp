#pragma once

#include <json.hpp>
#include <string>

#include "qpr/config.hpp"
#include "qpr/evolution.hpp"

namespace qpr {

enum ExitCode : int {
  kExitOk = 0,
  kExitSelfcheck = 1,
  kExitConfig = 2,
  kExitExcluded = 3,
  kExitStage = 4,
};

struct RunReport {
  nlohmann::ordered_json doc;
  int exit_code = kExitOk;
};

// Each command fills the report and writes its files into out_dir (created if missing; empty string: no files).
// Typed failures are caught and mapped onto the exit code with the failing stage named.
RunReport cmd_straighten(const RunConfig& cfg, const std::string& out_dir);
RunReport cmd_reduce(const RunConfig& cfg, const std::string& out_dir);
RunReport cmd_evolve(const RunConfig& cfg, const std::string& out_dir);
RunReport cmd_measure(const RunConfig& cfg, const std::string& out_dir);
RunReport cmd_selfcheck(const RunConfig& cfg, const std::string& out_dir);

// straighten -> regularize -> kam_iterate on the configured omega
struct Reduction {
  Regularized reg;
  KamResult kam;
  FullDiagonalizer diag;
};
Reduction reduce(const RunConfig& cfg, bool assemble = true);

}  // namespace qpr
