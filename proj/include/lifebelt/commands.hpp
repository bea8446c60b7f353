#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "lifebelt/config.hpp"
#include "lifebelt/pmcmc.hpp"

namespace lifebelt {

struct CommandResult {
  std::vector<std::filesystem::path> files;  // written artifacts, config echo last
  std::string message;                       // human-readable summary
};

// Each command checks its keys, fills defaults into `cfg` (so the echo is the
// effective configuration) and writes `<run.out>/<run.id>.*`.
CommandResult cmd_simulate(RunConfig& cfg);
CommandResult cmd_filter(RunConfig& cfg);
CommandResult cmd_grid(RunConfig& cfg);
CommandResult cmd_pmcmc(RunConfig& cfg);
CommandResult cmd_compare(RunConfig& cfg);

/// Dispatch by subcommand name; throws ConfigError for an unknown name.
CommandResult run_command(std::string_view name, RunConfig& cfg);

struct CompareOptions {
  std::size_t N = 500;
  std::size_t T = 0;
  std::size_t apf_cap = 1'000'000;
  double ess_threshold = 5.0;
  std::size_t hist_bins = 30;
};

/// Aggregates of an LBPF-driven and an APF-driven chain run with matched
/// seeds: collapse fractions, final-step ESS mass below the threshold, total
/// proposals, the APF attempts histogram (log10 bins) and its classes
/// minimal (n = N T), terminated (collapsed), saturated (cap hit, completed).
nlohmann::json compare_report(const ChainTrace& lbpf, const ChainTrace& apf,
                              const CompareOptions& opts);

}  // namespace lifebelt
