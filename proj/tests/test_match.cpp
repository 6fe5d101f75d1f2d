#include "doctest.h"

#include <cstdio>
#include <fstream>
#include <set>

#include "json.hpp"

#include "mapcsim/match.hpp"

using namespace mapcsim;

namespace {

std::string base_config(const std::string& engine, int agents, std::uint64_t seed, int steps) {
  return R"({
    "seed": )" + std::to_string(seed) + R"(,
    "steps": )" + std::to_string(steps) + R"(,
    "log_verbosity": 1,
    "world": {
      "width": 24, "height": 24, "obstacle_density": 0.1,
      "dispenser_types": ["b0"], "dispensers_per_type": 2,
      "goal_clusters": 1, "goal_cluster_size": 4,
      "tasks": {"spawn_period": 20, "shape_sizes": [2], "max_active": 2,
                 "deadline_horizon": 80, "reward_per_block": 10}
    },
    "teams": [
      {"name": "A", "engine": ")" + engine + R"(", "agents": )" + std::to_string(agents) + R"(,
       "reasoner": {"budget": {"mode": "ops", "ops": 200000}}}
    ]
  })";
}

}  // namespace

TEST_SUITE("match") {

TEST_CASE("config parse errors carry a line number") {
  try {
    parse_match_config("{\n  \"steps\": 10,\n  broken\n}");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("semantic violations name the offending field") {
  try {
    parse_match_config(R"({"teams": []})");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("$.teams") != std::string::npos);
  }
  try {
    parse_match_config(R"({"teams": [{"name": "A", "engine": "nonsense"}]})");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("engine") != std::string::npos);
  }
  try {
    parse_match_config(R"({"steps": -3, "teams": [{"name": "A"}]})");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("steps") != std::string::npos);
  }
}

TEST_CASE("config echo round-trips through the parser") {
  MatchConfig cfg = parse_match_config(base_config("fitbut", 2, 5, 40));
  std::string once = config_to_json(cfg);
  MatchConfig again = parse_match_config(once);
  CHECK(config_to_json(again) == once);
}

TEST_CASE("identical seeds produce byte-identical logs") {
  MatchConfig cfg = parse_match_config(base_config("fitbut", 3, 21, 60));
  MatchRun r1 = run_match_lines(cfg);
  MatchRun r2 = run_match_lines(cfg);
  CHECK(r1.lines == r2.lines);
  CHECK(r1.summary.core_equals(r2.summary));

  cfg.seed = 22;
  MatchRun r3 = run_match_lines(cfg);
  CHECK_FALSE(r1.lines == r3.lines);
}

TEST_CASE("a zero-task config ends with zero scores") {
  std::string text = base_config("fitbut", 2, 9, 50);
  MatchConfig cfg = parse_match_config(text);
  cfg.world.gen.task_spawn_period = 0;
  MatchRun run = run_match_lines(cfg);
  CHECK(run.summary.scores.at("A") == 0);
  CHECK(run.summary.tasks_completed.at("A") == 0);
}

TEST_CASE("every log line is schema-valid json with a known kind") {
  MatchConfig cfg = parse_match_config(base_config("desouches", 3, 13, 50));
  cfg.log_verbosity = 2;
  MatchRun run = run_match_lines(cfg);
  const std::set<std::string> kinds{"header",     "action",    "task_spawn", "task_expired",
                                    "submit",     "clear_spawn", "detonation", "sync",
                                    "reservation", "scenario",  "plan_selected", "state"};
  REQUIRE_FALSE(run.lines.empty());
  int states = 0;
  for (const std::string& line : run.lines) {
    nlohmann::json j = nlohmann::json::parse(line);
    REQUIRE(j.contains("kind"));
    CHECK(kinds.count(j["kind"].get<std::string>()) == 1);
    if (j["kind"] == "state") {
      ++states;
      CHECK(j["hash"].get<std::string>().size() == 16);
    }
    if (j["kind"] == "action") {
      CHECK(j.contains("agent"));
      CHECK(j.contains("team"));
      CHECK(j.contains("result"));
      CHECK(j["action"].contains("type"));
    }
  }
  CHECK(states == cfg.steps);
  nlohmann::json header = nlohmann::json::parse(run.lines.front());
  CHECK(header["kind"] == "header");
}

TEST_CASE("replay accepts untouched logs and pinpoints mutations") {
  MatchConfig cfg = parse_match_config(base_config("fitbut", 2, 31, 40));
  MatchResult res = run_match(cfg, "build/test_out");
  ReplayResult ok = replay_verify(res.log_path);
  CHECK(ok.ok);

  // Flip one action record and watch the divergence land on its step.
  std::ifstream in(res.log_path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  in.close();
  int mutated_step = -1;
  for (std::string& l : lines) {
    nlohmann::json j = nlohmann::json::parse(l);
    if (j["kind"] == "action" && j["action"]["type"] == "move") {
      j["action"]["dir"] = j["action"]["dir"] == "e" ? "w" : "e";
      mutated_step = j["step"].get<int>();
      l = j.dump();
      break;
    }
  }
  REQUIRE(mutated_step >= 0);
  std::string mutated_path = "build/test_out/mutated.jsonl";
  std::ofstream out(mutated_path, std::ios::trunc);
  for (const std::string& l : lines) out << l << "\n";
  out.close();
  ReplayResult bad = replay_verify(mutated_path);
  CHECK_FALSE(bad.ok);
  CHECK(bad.divergence_step == mutated_step);
}

TEST_CASE("replay holds for every engine type") {
  for (const std::string engine : {"fitbut", "desouches", "randomBaseline"}) {
    MatchConfig cfg = parse_match_config(base_config(engine, 2, 77, 30));
    MatchResult res = run_match(cfg, "build/test_out");
    ReplayResult r = replay_verify(res.log_path);
    CHECK_MESSAGE(r.ok, engine, ": ", r.detail);
  }
}

TEST_CASE("summaries re-derived from the log match the runner's") {
  MatchConfig cfg = parse_match_config(base_config("desouches", 3, 41, 60));
  MatchResult res = run_match(cfg, "build/test_out");
  MatchSummary from_log = summarize_log(res.log_path);
  CHECK(from_log.core_equals(res.summary));
}

TEST_CASE("scores in the summary match the final world state") {
  // Run a two-team match and cross-check score bookkeeping end to end.
  std::string text = R"({
    "seed": 3, "steps": 40,
    "world": {"width": 20, "height": 20, "obstacle_density": 0.05,
               "dispenser_types": ["b0"],
               "tasks": {"spawn_period": 15, "shape_sizes": [2]}},
    "teams": [
      {"name": "A", "engine": "fitbut", "agents": 2,
       "reasoner": {"budget": {"mode": "ops", "ops": 100000}}},
      {"name": "B", "engine": "randomBaseline", "agents": 2}
    ]
  })";
  MatchConfig cfg = parse_match_config(text);
  long long final_a = -1, final_b = -1;
  MatchRun run = run_match_lines(cfg, [&](const WorldState& w, const auto&) {
    final_a = w.scores.at("A");
    final_b = w.scores.at("B");
  });
  CHECK(run.summary.scores.at("A") == final_a);
  CHECK(run.summary.scores.at("B") == final_b);
}

TEST_CASE("full-sync metrics agree with the sync event log") {
  MatchConfig cfg = parse_match_config(base_config("desouches", 4, 8, 120));
  cfg.world.obstacle_density = 0.05;
  MatchRun run = run_match_lines(cfg);
  int merges = 0;
  int sync_step_from_events = -1;
  for (const std::string& line : run.lines) {
    nlohmann::json j = nlohmann::json::parse(line);
    if (j["kind"] == "sync") {
      ++merges;
      if (merges == 3) sync_step_from_events = j["step"].get<int>();
    }
  }
  CHECK(run.summary.total_merges.at("A") == merges);
  CHECK(merges <= 3);  // n-1 bound for four agents
  CHECK(run.summary.steps_to_full_sync.at("A") == (merges == 3 ? sync_step_from_events : -1));
}

}
