#pragma once

#include <functional>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "mapcsim/desouches.hpp"
#include "mapcsim/engine.hpp"
#include "mapcsim/fitbut.hpp"
#include "mapcsim/worldgen.hpp"

namespace mapcsim {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EngineSpec {
  std::string name;
  std::string engine = "fitbut";  // fitbut | desouches | randomBaseline
  int agents = 1;
  ReasonerConfig reasoner;
  DeSouchesConfig desouches;
};

struct MatchConfig {
  std::uint64_t seed = 0;
  int steps = 300;
  WorldGenConfig world;
  std::vector<EngineSpec> teams;
  int log_verbosity = 1;
};

// Parses and validates; throws ConfigError with a line-precise message on
// malformed JSON and a field-path message on semantic violations.
MatchConfig parse_match_config(const std::string& json_text);
std::string config_to_json(const MatchConfig& cfg);

struct MatchSummary {
  int steps = 0;
  std::map<std::string, long long> scores;
  std::map<std::string, int> tasks_completed;
  std::map<std::string, int> tasks_attempted;
  std::map<std::string, int> steps_to_full_sync;  // -1 when never reached
  std::map<std::string, int> total_merges;
  // (step, team -> group count), recorded on every change.
  std::vector<std::pair<int, std::map<std::string, int>>> group_count_timeline;
  // team -> action type -> result -> count
  std::map<std::string, std::map<std::string, std::map<std::string, long long>>> action_counts;

  // Wall-clock stats ride along but never participate in equality.
  double wall_ms_total = 0;
  double wall_ms_max_step = 0;

  bool core_equals(const MatchSummary& o) const;
  std::string to_json() const;
};

// Read-only per-step hook; the world is the post-step state.
using StepObserver =
    std::function<void(const WorldState&, const std::map<std::string, const TeamEngine*>&)>;

struct MatchRun {
  MatchSummary summary;
  std::vector<std::string> lines;  // full event log
};

// Deterministic in (config, seed) for ops/unlimited budget modes.
MatchRun run_match_lines(const MatchConfig& cfg, const StepObserver& observer = nullptr);

struct MatchResult {
  MatchSummary summary;
  std::string log_path;
};

// run_match_lines plus a log file `match-<seed>.jsonl` under out_dir.
MatchResult run_match(const MatchConfig& cfg, const std::string& out_dir,
                      const StepObserver& observer = nullptr);

struct ReplayResult {
  bool ok = false;
  int divergence_step = -1;
  std::string detail;
};

// Re-simulates from the header config and compares every line.
ReplayResult replay_verify(const std::string& log_path);

MatchSummary summarize_lines(const std::vector<std::string>& lines);
MatchSummary summarize_log(const std::string& log_path);

}  // namespace mapcsim
