#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <optional>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "qpr/config.hpp"
#include "qpr/errors.hpp"
#include "qpr/pipeline.hpp"

using namespace qpr;

int main(int argc, char** argv) {
  CLI::App app{"reducibility pipeline for quasi-periodic transport operators"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out_dir = "out";
  std::optional<std::uint64_t> seed;
  int threads = 0;
  app.add_option("--config,-c", config_path, "YAML configuration")->check(CLI::ExistingFile);
  app.add_option("--out,-o", out_dir, "output directory");
  app.add_option("--seed", seed, "override the configured seed");
  app.add_option("--threads", threads, "OpenMP threads (0: runtime default)")->check(CLI::NonNegativeNumber);

  using Cmd = RunReport (*)(const RunConfig&, const std::string&);
  const std::pair<const char*, Cmd> commands[] = {
      {"straighten", cmd_straighten}, {"reduce", cmd_reduce},       {"evolve", cmd_evolve},
      {"measure", cmd_measure},       {"selfcheck", cmd_selfcheck},
  };
  const char* help[] = {"straighten the transport part", "regularize and diagonalize", "evolve full and reduced dynamics",
                        "excluded-measure table", "run the invariant checks"};
  std::vector<CLI::App*> subs;
  for (std::size_t i = 0; i < std::size(commands); ++i) subs.push_back(app.add_subcommand(commands[i].first, help[i]));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // usage errors are configuration errors; --help exits cleanly
    int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#endif

  RunConfig cfg;
  try {
    if (config_path.empty()) {
      // selfcheck needs no problem data
      if (!subs.back()->parsed()) throw ConfigError("--config is required for this command");
      cfg = parse_config("schema_version: 1\n");
    } else {
      cfg = load_config(config_path);
    }
    if (seed) cfg.seed = *seed;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  for (std::size_t i = 0; i < subs.size(); ++i) {
    if (!subs[i]->parsed()) continue;
    RunReport r = commands[i].second(cfg, out_dir);
    std::cout << r.doc.dump(2) << "\n";
    return r.exit_code;
  }
  return kExitConfig;
}
