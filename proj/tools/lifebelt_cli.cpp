#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lifebelt/commands.hpp"
#include "lifebelt/config.hpp"
#include "lifebelt/errors.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kIoError = 3;
constexpr int kInvariantError = 4;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lifebelt particle filter toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::optional<int> threads;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "Run configuration (section.key = value lines)");
  app.add_option("--seed", seed, "Master seed (run.seed)");
  app.add_option("--out", out_dir, "Output directory (run.out)");
  app.add_option("--threads", threads, "Worker threads, 0 for all cores (run.threads)");
  app.add_option("--set", overrides, "Override a key: section.key=value (repeatable)");

  const std::vector<std::pair<const char*, const char*>> commands = {
      {"simulate", "Simulate a dataset and its latent path"},
      {"filter", "Run one particle filter and report the likelihood estimate"},
      {"grid", "Replicated likelihood estimates over a theta grid"},
      {"pmcmc", "Particle marginal Metropolis-Hastings chain"},
      {"compare", "LBPF- and APF-driven chains with matched seeds"}};
  for (const auto& [name, help] : commands) {
    app.add_subcommand(name, help)->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    lifebelt::RunConfig cfg;
    if (!config_path.empty()) cfg = lifebelt::RunConfig::load(config_path);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw lifebelt::ConfigError("--set expects key=value: " + kv);
      auto parsed = lifebelt::RunConfig::parse(kv.substr(0, eq) + " = " + kv.substr(eq + 1), "--set");
      for (const auto& [k, v] : parsed.entries()) cfg.set(k, v);
    }
    if (seed) cfg.set("run.seed", std::to_string(*seed));
    if (!out_dir.empty()) cfg.set("run.out", out_dir);
    if (threads) cfg.set("run.threads", std::to_string(*threads));

    const std::string name = app.get_subcommands().front()->get_name();
    const auto res = lifebelt::run_command(name, cfg);
    std::cout << res.message << "\n";
    for (const auto& f : res.files) std::cout << "wrote " << f.string() << "\n";
    return 0;
  } catch (const lifebelt::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const lifebelt::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIoError;
  } catch (const lifebelt::InvariantError& e) {
    std::cerr << "invariant violated: " << e.what() << "\n";
    return kInvariantError;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInvariantError;
  }
}
