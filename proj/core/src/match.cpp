#include "mapcsim/match.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "mapcsim/event_log.hpp"

namespace mapcsim {

namespace {

using nlohmann::json;

[[noreturn]] void config_fail(const std::string& path, const std::string& what) {
  throw ConfigError(path + ": " + what);
}

int get_int(const json& j, const char* key, int def, const std::string& path, int min_v,
            int max_v = 1 << 30) {
  if (!j.contains(key)) return def;
  if (!j[key].is_number_integer()) config_fail(path + "." + key, "expected integer");
  int v = j[key].get<int>();
  if (v < min_v || v > max_v)
    config_fail(path + "." + key, "out of range [" + std::to_string(min_v) + "," +
                                      std::to_string(max_v) + "]");
  return v;
}

double get_num(const json& j, const char* key, double def, const std::string& path, double min_v,
               double max_v) {
  if (!j.contains(key)) return def;
  if (!j[key].is_number()) config_fail(path + "." + key, "expected number");
  double v = j[key].get<double>();
  if (v < min_v || v > max_v) config_fail(path + "." + key, "out of range");
  return v;
}

SimRules parse_rules(const json& j, const std::string& path) {
  SimRules r;
  r.vision_radius = get_int(j, "vision_radius", r.vision_radius, path, 1, 64);
  r.max_energy = get_int(j, "max_energy", r.max_energy, path, 1);
  r.energy_recharge = get_int(j, "energy_recharge", r.energy_recharge, path, 0);
  r.clear_cost = get_int(j, "clear_cost", r.clear_cost, path, 0);
  r.clear_charge_steps = get_int(j, "clear_charge_steps", r.clear_charge_steps, path, 1, 100);
  r.clear_range = get_int(j, "clear_range", r.clear_range, path, 1, 32);
  r.clear_event_radius = get_int(j, "clear_event_radius", r.clear_event_radius, path, 1, 32);
  r.warn_steps = get_int(j, "warn_steps", r.warn_steps, path, 1, 100);
  return r;
}

json rules_to_json(const SimRules& r) {
  return json{{"vision_radius", r.vision_radius},
              {"max_energy", r.max_energy},
              {"energy_recharge", r.energy_recharge},
              {"clear_cost", r.clear_cost},
              {"clear_charge_steps", r.clear_charge_steps},
              {"clear_range", r.clear_range},
              {"clear_event_radius", r.clear_event_radius},
              {"warn_steps", r.warn_steps}};
}

WorldGenConfig parse_world(const json& j, const std::string& path) {
  WorldGenConfig w;
  w.width = get_int(j, "width", w.width, path, 8, 512);
  w.height = get_int(j, "height", w.height, path, 8, 512);
  w.obstacle_density = get_num(j, "obstacle_density", w.obstacle_density, path, 0.0, 0.9);
  if (j.contains("dispenser_types")) {
    if (!j["dispenser_types"].is_array() || j["dispenser_types"].empty())
      config_fail(path + ".dispenser_types", "expected non-empty array");
    w.dispenser_types.clear();
    for (const auto& t : j["dispenser_types"]) w.dispenser_types.push_back(t.get<std::string>());
  }
  w.dispensers_per_type = get_int(j, "dispensers_per_type", w.dispensers_per_type, path, 1, 64);
  w.goal_clusters = get_int(j, "goal_clusters", w.goal_clusters, path, 1, 8);
  w.goal_cluster_size = get_int(j, "goal_cluster_size", w.goal_cluster_size, path, 1, 128);
  w.agent_min_spacing = get_int(j, "agent_min_spacing", w.agent_min_spacing, path, 0, 64);
  if (j.contains("obstacle_regrowth")) w.obstacle_regrowth = j["obstacle_regrowth"].get<bool>();
  if (j.contains("rules")) w.rules = parse_rules(j["rules"], path + ".rules");
  if (j.contains("tasks")) {
    const json& t = j["tasks"];
    const std::string tp = path + ".tasks";
    w.gen.task_spawn_period = get_int(t, "spawn_period", w.gen.task_spawn_period, tp, 0);
    w.gen.max_active_tasks = get_int(t, "max_active", w.gen.max_active_tasks, tp, 1, 64);
    w.gen.deadline_horizon = get_int(t, "deadline_horizon", w.gen.deadline_horizon, tp, 1);
    w.gen.reward_per_block = get_int(t, "reward_per_block", w.gen.reward_per_block, tp, 1);
    if (t.contains("recurring")) w.gen.recurring = t["recurring"].get<bool>();
    if (t.contains("entries_connected"))
      w.gen.entries_connected = t["entries_connected"].get<bool>();
    if (t.contains("shape_sizes")) {
      if (!t["shape_sizes"].is_array() || t["shape_sizes"].empty())
        config_fail(tp + ".shape_sizes", "expected non-empty array");
      w.gen.shape_sizes.clear();
      for (const auto& s : t["shape_sizes"]) {
        int v = s.get<int>();
        if (v < 1 || v > 8) config_fail(tp + ".shape_sizes", "sizes must be in [1,8]");
        w.gen.shape_sizes.push_back(v);
      }
    }
  }
  w.gen.clear_event_rate = get_num(j, "clear_event_rate", w.gen.clear_event_rate, path, 0.0, 1.0);
  w.gen.block_types = w.dispenser_types;
  return w;
}

json world_to_json(const WorldGenConfig& w) {
  json types = json::array();
  for (const auto& t : w.dispenser_types) types.push_back(t);
  json sizes = json::array();
  for (int s : w.gen.shape_sizes) sizes.push_back(s);
  return json{{"width", w.width},
              {"height", w.height},
              {"obstacle_density", w.obstacle_density},
              {"dispenser_types", types},
              {"dispensers_per_type", w.dispensers_per_type},
              {"goal_clusters", w.goal_clusters},
              {"goal_cluster_size", w.goal_cluster_size},
              {"agent_min_spacing", w.agent_min_spacing},
              {"obstacle_regrowth", w.obstacle_regrowth},
              {"clear_event_rate", w.gen.clear_event_rate},
              {"rules", rules_to_json(w.rules)},
              {"tasks", json{{"spawn_period", w.gen.task_spawn_period},
                             {"max_active", w.gen.max_active_tasks},
                             {"deadline_horizon", w.gen.deadline_horizon},
                             {"reward_per_block", w.gen.reward_per_block},
                             {"recurring", w.gen.recurring},
                             {"entries_connected", w.gen.entries_connected},
                             {"shape_sizes", sizes}}}};
}

EngineSpec parse_team(const json& j, const std::string& path) {
  EngineSpec spec;
  if (!j.contains("name") || !j["name"].is_string())
    config_fail(path + ".name", "expected string");
  spec.name = j["name"].get<std::string>();
  if (j.contains("engine")) spec.engine = j["engine"].get<std::string>();
  if (spec.engine != "fitbut" && spec.engine != "desouches" && spec.engine != "randomBaseline")
    config_fail(path + ".engine", "expected fitbut | desouches | randomBaseline");
  spec.agents = get_int(j, "agents", 1, path, 1, 64);
  if (j.contains("reasoner")) {
    const json& r = j["reasoner"];
    const std::string rp = path + ".reasoner";
    spec.reasoner.max_structure_size =
        get_int(r, "max_structure_size", spec.reasoner.max_structure_size, rp, 2, 64);
    spec.reasoner.max_hoard = get_int(r, "max_hoard", spec.reasoner.max_hoard, rp, 1, 8);
    spec.reasoner.go_submit_short_len =
        get_int(r, "go_submit_short_len", spec.reasoner.go_submit_short_len, rp, 1, 32);
    spec.reasoner.candidate_cap = get_int(r, "candidate_cap", spec.reasoner.candidate_cap, rp, 1);
    spec.reasoner.max_iterations =
        get_int(r, "max_iterations", spec.reasoner.max_iterations, rp, 1);
    if (r.contains("budget")) {
      const json& b = r["budget"];
      if (b.contains("mode")) spec.reasoner.budget_mode = b["mode"].get<std::string>();
      if (spec.reasoner.budget_mode != "wall" && spec.reasoner.budget_mode != "ops" &&
          spec.reasoner.budget_mode != "unlimited")
        config_fail(rp + ".budget.mode", "expected wall | ops | unlimited");
      spec.reasoner.budget_ms = get_int(b, "ms", spec.reasoner.budget_ms, rp + ".budget", 1);
      spec.reasoner.budget_ops = static_cast<std::uint64_t>(
          get_int(b, "ops", static_cast<int>(spec.reasoner.budget_ops), rp + ".budget", 0));
    }
  }
  if (j.contains("desouches")) {
    const json& d = j["desouches"];
    const std::string dp = path + ".desouches";
    spec.desouches.walk_min = get_int(d, "walk_min", spec.desouches.walk_min, dp, 1);
    spec.desouches.walk_max = get_int(d, "walk_max", spec.desouches.walk_max, dp, 1);
    spec.desouches.retry_cap = get_int(d, "retry_cap", spec.desouches.retry_cap, dp, 1);
    spec.desouches.max_iterations =
        get_int(d, "max_iterations", spec.desouches.max_iterations, dp, 1);
    if (spec.desouches.walk_max < spec.desouches.walk_min)
      config_fail(dp + ".walk_max", "must be >= walk_min");
  }
  return spec;
}

json team_to_json(const EngineSpec& t) {
  return json{{"name", t.name},
              {"engine", t.engine},
              {"agents", t.agents},
              {"reasoner", json{{"max_structure_size", t.reasoner.max_structure_size},
                                {"max_hoard", t.reasoner.max_hoard},
                                {"go_submit_short_len", t.reasoner.go_submit_short_len},
                                {"candidate_cap", t.reasoner.candidate_cap},
                                {"max_iterations", t.reasoner.max_iterations},
                                {"budget", json{{"mode", t.reasoner.budget_mode},
                                                {"ms", t.reasoner.budget_ms},
                                                {"ops", t.reasoner.budget_ops}}}}},
              {"desouches", json{{"walk_min", t.desouches.walk_min},
                                 {"walk_max", t.desouches.walk_max},
                                 {"retry_cap", t.desouches.retry_cap},
                                 {"max_iterations", t.desouches.max_iterations}}}};
}

MatchConfig config_from_json_obj(const json& j) {
  MatchConfig cfg;
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  cfg.steps = get_int(j, "steps", cfg.steps, "$", 1, 1000000);
  cfg.log_verbosity = get_int(j, "log_verbosity", cfg.log_verbosity, "$", 0, 3);
  if (j.contains("world")) cfg.world = parse_world(j["world"], "$.world");
  if (!j.contains("teams") || !j["teams"].is_array() || j["teams"].empty())
    config_fail("$.teams", "expected non-empty array");
  for (size_t i = 0; i < j["teams"].size(); ++i) {
    cfg.teams.push_back(parse_team(j["teams"][i], "$.teams[" + std::to_string(i) + "]"));
  }
  std::set<std::string> names;
  for (const auto& t : cfg.teams) {
    if (!names.insert(t.name).second) config_fail("$.teams", "duplicate team name " + t.name);
  }
  return cfg;
}

std::unique_ptr<TeamEngine> build_engine(const EngineSpec& spec, const TeamContext& ctx) {
  if (spec.engine == "fitbut") return make_fitbut(ctx, spec.reasoner);
  if (spec.engine == "desouches") return make_desouches(ctx, spec.desouches);
  return make_random_baseline(ctx);
}

StepBudget build_budget(const EngineSpec& spec) {
  if (spec.engine != "fitbut") return StepBudget::unlimited();
  if (spec.reasoner.budget_mode == "ops" && spec.reasoner.budget_ops > 0)
    return StepBudget::operation_count(spec.reasoner.budget_ops);
  if (spec.reasoner.budget_mode == "wall")
    return StepBudget::wall_clock(std::chrono::milliseconds(spec.reasoner.budget_ms));
  return StepBudget::unlimited();
}

}  // namespace

MatchConfig parse_match_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    size_t line = 1;
    for (size_t i = 0; i < e.byte && i < json_text.size(); ++i) {
      if (json_text[i] == '\n') ++line;
    }
    throw ConfigError("line " + std::to_string(line) + ": " + e.what());
  }
  return config_from_json_obj(j);
}

std::string config_to_json(const MatchConfig& cfg) {
  json teams = json::array();
  for (const auto& t : cfg.teams) teams.push_back(team_to_json(t));
  json j{{"seed", cfg.seed},
         {"steps", cfg.steps},
         {"log_verbosity", cfg.log_verbosity},
         {"world", world_to_json(cfg.world)},
         {"teams", teams}};
  return j.dump();
}

bool MatchSummary::core_equals(const MatchSummary& o) const {
  return steps == o.steps && scores == o.scores && tasks_completed == o.tasks_completed &&
         tasks_attempted == o.tasks_attempted && steps_to_full_sync == o.steps_to_full_sync &&
         total_merges == o.total_merges && group_count_timeline == o.group_count_timeline &&
         action_counts == o.action_counts;
}

std::string MatchSummary::to_json() const {
  json j;
  j["steps"] = steps;
  j["scores"] = scores;
  j["tasks_completed"] = tasks_completed;
  j["tasks_attempted"] = tasks_attempted;
  j["steps_to_full_sync"] = steps_to_full_sync;
  j["total_merges"] = total_merges;
  json timeline = json::array();
  for (const auto& [step, counts] : group_count_timeline) {
    timeline.push_back(json{{"step", step}, {"groups", counts}});
  }
  j["group_count_timeline"] = timeline;
  j["action_counts"] = action_counts;
  j["timing"] = json{{"wall_ms_total", wall_ms_total}, {"wall_ms_max_step", wall_ms_max_step}};
  return j.dump(2);
}

MatchRun run_match_lines(const MatchConfig& cfg, const StepObserver& observer) {
  std::vector<TeamSpec> specs;
  for (const auto& t : cfg.teams) specs.push_back({t.name, t.agents});
  WorldState world = generate_world(cfg.world, specs, cfg.seed);

  std::vector<std::string> team_by_agent;
  for (const auto& a : world.agents) team_by_agent.push_back(a.team);

  Rng seeder(cfg.seed);
  struct TeamSlot {
    EngineSpec spec;
    TeamContext ctx;
    std::unique_ptr<TeamEngine> engine;
  };
  std::vector<TeamSlot> slots;
  for (const auto& spec : cfg.teams) {
    TeamContext ctx;
    ctx.team = spec.name;
    ctx.rules = world.rules;
    ctx.seed = seeder.fork(slots.size() + 1).next();
    for (const auto& a : world.agents) {
      if (a.team == spec.name) ctx.agents.push_back(a.id);
    }
    TeamSlot slot{spec, ctx, build_engine(spec, ctx)};
    slots.push_back(std::move(slot));
  }

  MatchRun run;
  run.lines.push_back(json{{"kind", "header"},
                           {"schema", 1},
                           {"config", json::parse(config_to_json(cfg))}}
                          .dump());

  std::map<AgentId, Percept> percepts;
  for (const auto& a : world.agents) percepts.emplace(a.id, gen_percept(world, a.id));

  std::map<std::string, const TeamEngine*> engine_map;
  for (const auto& slot : slots) engine_map[slot.spec.name] = slot.engine.get();

  const auto t_start = std::chrono::steady_clock::now();
  double max_step_ms = 0;

  for (int s = 0; s < cfg.steps; ++s) {
    const auto t_step = std::chrono::steady_clock::now();
    std::map<AgentId, Action> actions;
    for (auto& slot : slots) {
      std::map<AgentId, Percept> team_percepts;
      for (AgentId id : slot.ctx.agents) {
        auto it = percepts.find(id);
        if (it != percepts.end()) team_percepts.emplace(id, it->second);
      }
      StepBudget budget = build_budget(slot.spec);
      EventSink sink(cfg.log_verbosity);
      std::map<AgentId, Action> team_actions = slot.engine->step(team_percepts, budget, sink);
      for (const TraceEvent& ev : sink.drain()) {
        run.lines.push_back(render_trace_event(s, ev));
      }
      for (auto& [id, act] : team_actions) {
        if (std::find(slot.ctx.agents.begin(), slot.ctx.agents.end(), id) !=
            slot.ctx.agents.end()) {
          actions[id] = act;
        }
      }
    }

    StepOutcome outcome = step_world(world, actions);
    for (const WorldEvent& ev : outcome.events) {
      run.lines.push_back(render_world_event(ev, team_by_agent));
    }
    run.lines.push_back(render_state_line(s, world_hash(world)));
    percepts = std::move(outcome.percepts);

    if (observer) observer(world, engine_map);

    double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_step)
                    .count();
    max_step_ms = std::max(max_step_ms, ms);
  }

  run.summary = summarize_lines(run.lines);
  run.summary.wall_ms_total =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_start).count();
  run.summary.wall_ms_max_step = max_step_ms;
  return run;
}

MatchResult run_match(const MatchConfig& cfg, const std::string& out_dir,
                      const StepObserver& observer) {
  MatchRun run = run_match_lines(cfg, observer);
  std::filesystem::create_directories(out_dir);
  std::string path = out_dir + "/match-" + std::to_string(cfg.seed) + ".jsonl";
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  for (const std::string& line : run.lines) out << line << "\n";
  out.close();
  return {std::move(run.summary), path};
}

ReplayResult replay_verify(const std::string& log_path) {
  ReplayResult result;
  std::ifstream in(log_path, std::ios::binary);
  if (!in) {
    result.detail = "cannot open " + log_path;
    return result;
  }
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) lines.push_back(line);
  }
  if (lines.empty()) {
    result.detail = "empty log";
    return result;
  }

  MatchConfig cfg;
  try {
    json header = json::parse(lines.front());
    if (header.value("kind", "") != "header") {
      result.detail = "first record is not a header";
      return result;
    }
    cfg = config_from_json_obj(header.at("config"));
  } catch (const std::exception& e) {
    result.detail = std::string("bad header: ") + e.what();
    return result;
  }

  MatchRun rerun = run_match_lines(cfg);
  size_t n = std::min(lines.size(), rerun.lines.size());
  for (size_t i = 0; i < n; ++i) {
    if (lines[i] != rerun.lines[i]) {
      result.divergence_step = [&] {
        try {
          json j = json::parse(lines[i]);
          if (j.contains("step")) return j["step"].get<int>();
        } catch (...) {
        }
        return -1;
      }();
      result.detail = "line " + std::to_string(i + 1) + " differs";
      return result;
    }
  }
  if (lines.size() != rerun.lines.size()) {
    result.detail = "log length differs: " + std::to_string(lines.size()) + " vs " +
                    std::to_string(rerun.lines.size());
    result.divergence_step = -1;
    return result;
  }
  result.ok = true;
  return result;
}

MatchSummary summarize_lines(const std::vector<std::string>& lines) {
  MatchSummary sum;
  std::map<std::string, int> group_count;
  bool have_header = false;

  for (const std::string& line : lines) {
    json j = json::parse(line);
    const std::string kind = j.value("kind", "");
    if (kind == "header") {
      have_header = true;
      const json& cfg = j.at("config");
      sum.steps = cfg.value("steps", 0);
      for (const auto& t : cfg.at("teams")) {
        std::string name = t.at("name").get<std::string>();
        int agents = t.value("agents", 1);
        sum.scores[name] = 0;
        sum.tasks_completed[name] = 0;
        sum.tasks_attempted[name] = 0;
        sum.total_merges[name] = 0;
        group_count[name] = agents;
        sum.steps_to_full_sync[name] = agents == 1 ? 0 : -1;
      }
      std::map<std::string, int> snapshot = group_count;
      sum.group_count_timeline.emplace_back(-1, std::move(snapshot));
    } else if (kind == "action") {
      std::string team = j.at("team").get<std::string>();
      std::string type = j.at("action").at("type").get<std::string>();
      std::string result = j.at("result").get<std::string>();
      sum.action_counts[team][type][result] += 1;
      if (type == "submit") sum.tasks_attempted[team] += 1;
    } else if (kind == "submit") {
      std::string team = j.at("team").get<std::string>();
      sum.tasks_completed[team] += 1;
      sum.scores[team] = j.at("score").get<long long>();
    } else if (kind == "sync") {
      std::string team = j.at("team").get<std::string>();
      group_count[team] -= 1;
      sum.total_merges[team] += 1;
      int step = j.value("step", -1);
      if (group_count[team] == 1 && sum.steps_to_full_sync[team] < 0) {
        sum.steps_to_full_sync[team] = step;
      }
      std::map<std::string, int> snapshot = group_count;
      sum.group_count_timeline.emplace_back(step, std::move(snapshot));
    }
  }
  if (!have_header) throw ConfigError("log has no header record");
  return sum;
}

MatchSummary summarize_log(const std::string& log_path) {
  std::ifstream in(log_path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + log_path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) lines.push_back(line);
  }
  return summarize_lines(lines);
}

}  // namespace mapcsim
