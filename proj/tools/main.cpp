#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "mapcsim/match.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw mapcsim::ConfigError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MAPC-style block-assembly match runner"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::string log_path;
  long long seed_override = -1;
  int steps_override = -1;
  int verbosity_override = -1;

  CLI::App* run = app.add_subcommand("run", "Run a seeded match from a JSON config");
  run->add_option("--config", config_path, "Match config JSON file")->required();
  run->add_option("--seed", seed_override, "Override the config seed");
  run->add_option("--steps", steps_override, "Override the number of steps");
  run->add_option("--out", out_dir, "Output directory for the event log and summary");
  run->add_option("--verbosity", verbosity_override, "Log verbosity 0-3");

  CLI::App* replay = app.add_subcommand("replay", "Re-simulate a log and verify it matches");
  replay->add_option("--log", log_path, "Event log produced by run")->required();

  CLI::App* summarize = app.add_subcommand("summarize", "Recompute the summary from a log");
  summarize->add_option("--log", log_path, "Event log produced by run")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      mapcsim::MatchConfig cfg = mapcsim::parse_match_config(read_file(config_path));
      if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);
      if (steps_override > 0) cfg.steps = steps_override;
      if (verbosity_override >= 0) cfg.log_verbosity = verbosity_override;

      mapcsim::MatchResult result = mapcsim::run_match(cfg, out_dir);
      std::string summary_path = out_dir + "/summary-" + std::to_string(cfg.seed) + ".json";
      std::ofstream sum(summary_path, std::ios::binary | std::ios::trunc);
      sum << result.summary.to_json() << "\n";
      std::cout << "log: " << result.log_path << "\n"
                << "summary: " << summary_path << "\n"
                << result.summary.to_json() << "\n";
      return 0;
    }
    if (replay->parsed()) {
      mapcsim::ReplayResult r = mapcsim::replay_verify(log_path);
      if (r.ok) {
        std::cout << "ok\n";
        return 0;
      }
      std::cout << "divergence at step " << r.divergence_step << ": " << r.detail << "\n";
      return 3;
    }
    if (summarize->parsed()) {
      std::cout << mapcsim::summarize_log(log_path).to_json() << "\n";
      return 0;
    }
  } catch (const mapcsim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
