#include "doctest.h"

#include <set>

#include "mapcsim/desouches.hpp"
#include "mapcsim/event_log.hpp"
#include "oracles.hpp"

using namespace mapcsim;

namespace {

// Construction replay: place every role at its stance with its block already
// fetched and rotated, execute the joins in order, detach, submit. A valid
// placement plan must end in a successful submit.
bool replay_placement(const TaskShape& shape, const PlacementPlan& plan) {
  const int k = static_cast<int>(plan.roles.size());
  WorldState w = make_world(32, 32);
  const Coord g{16, 16};
  w.cell(g).kind = CellKind::Goal;
  Task task;
  task.name = "t";
  task.reward = 10 * k;
  task.deadline = 1000;
  task.shape = shape;
  w.tasks.push_back(task);

  std::vector<AgentId> ids;
  std::vector<BlockId> blocks;
  for (int i = 0; i < k; ++i) {
    const BlockRole& role = plan.roles[static_cast<size_t>(i)];
    AgentId id = add_agent(w, "A", g + role.stance);
    ids.push_back(id);
    Coord bp = g + role.stance + offset(role.carried_dir);
    if (!(bp == g + role.shape_entry)) return false;  // geometry must line up
    BlockId b = add_block(w, bp, role.block_type);
    blocks.push_back(b);
    add_attachment(w, EntKey::agent(id), EntKey::block(b));
  }

  // Joins in connect order, one pair per step, then the lieutenant detach.
  for (int i = 1; i < k; ++i) {
    const BlockRole& role = plan.roles[static_cast<size_t>(i)];
    if (role.join == BlockRole::Join::ConnectToStructure) {
      std::map<AgentId, Action> acts;
      acts[ids[0]] = Action::connect(ids[static_cast<size_t>(i)], role.commander_named,
                                     offset(role.carried_dir));
      acts[ids[static_cast<size_t>(i)]] =
          Action::connect(ids[0], offset(role.carried_dir), role.commander_named);
      step_world(w, acts);
      if (!(w.agents[ids[0]].last_action_result == ActionResult::success())) return false;
      step_world(w, {{ids[static_cast<size_t>(i)], Action::detach(role.carried_dir)}});
      if (!(w.agents[ids[static_cast<size_t>(i)]].last_action_result ==
            ActionResult::success()))
        return false;
    } else {
      step_world(w, {{ids[static_cast<size_t>(i)], Action::detach(role.carried_dir)}});
      if (!(w.agents[ids[static_cast<size_t>(i)]].last_action_result ==
            ActionResult::success()))
        return false;
      Dir d;
      if (!dir_from_offset(role.shape_entry, d)) return false;
      step_world(w, {{ids[0], Action::attach(d)}});
      if (!(w.agents[ids[0]].last_action_result == ActionResult::success())) return false;
    }
  }

  step_world(w, {{ids[0], Action::submit("t")}});
  return w.agents[ids[0]].last_action_result == ActionResult::success() &&
         w.scores["A"] == task.reward;
}

GroupMap known_grid(int w, int h) {
  GroupMap m;
  m.group_id = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      m.knowledge[{x, y}] = {TerrainBelief::Free, "", std::nullopt, 1, -1, -1};
    }
  }
  return m;
}

}  // namespace

TEST_SUITE("desouches") {

TEST_CASE("commander automaton walks the chain to done") {
  ScenarioAutomaton a;
  a.commander = true;
  CHECK(step_automaton(a, AutoEvent::GoalSucceeded) == AutoState::GetBlock);
  CHECK(step_automaton(a, AutoEvent::GoalSucceeded) == AutoState::GoToGoalPosition);
  CHECK(step_automaton(a, AutoEvent::GoalSucceeded) == AutoState::RotateBlock);
  CHECK(step_automaton(a, AutoEvent::GoalSucceeded) == AutoState::Connect);
  CHECK(step_automaton(a, AutoEvent::GoalSucceeded) == AutoState::Submit);
  CHECK(step_automaton(a, AutoEvent::GoalSucceeded) == AutoState::Done);
}

TEST_CASE("lieutenant automaton detaches and never submits") {
  ScenarioAutomaton a;
  a.commander = false;
  CHECK(step_automaton(a, AutoEvent::GoalSucceeded) == AutoState::GetBlock);
  CHECK(step_automaton(a, AutoEvent::GoalSucceeded) == AutoState::GoToGoalPosition);
  CHECK(step_automaton(a, AutoEvent::GoalSucceeded) == AutoState::RotateBlock);
  CHECK(step_automaton(a, AutoEvent::GoalSucceeded) == AutoState::Connect);
  CHECK(step_automaton(a, AutoEvent::GoalSucceeded) == AutoState::Detach);
  CHECK(step_automaton(a, AutoEvent::GoalSucceeded) == AutoState::Done);
}

TEST_CASE("exhaustive event walks keep lieutenants out of submit") {
  // Every event stream over the full alphabet, depth-first to a cutoff.
  std::vector<AutoEvent> alphabet{AutoEvent::GoalSucceeded, AutoEvent::GoalFailed,
                                  AutoEvent::BlockLost};
  std::function<void(ScenarioAutomaton, int)> walk = [&](ScenarioAutomaton a, int depth) {
    CHECK(a.state != AutoState::Submit);
    if (depth == 0 || a.state == AutoState::Done || a.state == AutoState::Failed) return;
    for (AutoEvent ev : alphabet) {
      ScenarioAutomaton next = a;
      step_automaton(next, ev);
      CHECK(next.state != AutoState::Submit);
      walk(next, depth - 1);
    }
  };
  ScenarioAutomaton lt;
  lt.commander = false;
  walk(lt, 8);
}

TEST_CASE("every automaton run terminates within bounded events") {
  // From any state, retry caps guarantee Done or Failed in finite events.
  Rng rng(17);
  for (int trial = 0; trial < 500; ++trial) {
    ScenarioAutomaton a;
    a.commander = rng.chance(0.5);
    int events = 0;
    while (a.state != AutoState::Done && a.state != AutoState::Failed) {
      REQUIRE(events < 200);
      AutoEvent ev = rng.chance(0.55) ? AutoEvent::GoalSucceeded
                    : rng.chance(0.5) ? AutoEvent::GoalFailed
                                      : AutoEvent::BlockLost;
      // An endless BlockLost stream never terminates by design; bias the tail
      // toward success so the walk drains.
      if (events > 120) ev = AutoEvent::GoalSucceeded;
      step_automaton(a, ev);
      ++events;
    }
  }
}

TEST_CASE("dispenser failures take a detour before retrying") {
  ScenarioAutomaton a;
  a.commander = true;
  CHECK(step_automaton(a, AutoEvent::GoalFailed) == AutoState::GoToDispenser);
  CHECK(a.detour);
  // The detour ends (either way) and the dispenser approach retries.
  CHECK(step_automaton(a, AutoEvent::GoalSucceeded) == AutoState::GoToDispenser);
  CHECK_FALSE(a.detour);
  CHECK(a.failures == 1);
}

TEST_CASE("five consecutive failures of one goal end the scenario") {
  ScenarioAutomaton a;
  a.commander = true;
  step_automaton(a, AutoEvent::GoalSucceeded);  // GetBlock
  for (int i = 0; i < 4; ++i) {
    CHECK(step_automaton(a, AutoEvent::GoalFailed) == AutoState::GetBlock);
  }
  CHECK(step_automaton(a, AutoEvent::GoalFailed) == AutoState::Failed);
}

TEST_CASE("a lost block restarts from the dispenser in any state") {
  for (AutoState st : {AutoState::GoToGoalPosition, AutoState::RotateBlock, AutoState::Connect,
                       AutoState::Submit}) {
    ScenarioAutomaton a;
    a.commander = true;
    a.state = st;
    a.failures = 3;
    CHECK(step_automaton(a, AutoEvent::BlockLost) == AutoState::GoToDispenser);
    CHECK(a.failures == 0);
  }
}

TEST_CASE("two-block vertical shape places commander north, helper south") {
  TaskShape shape;
  shape.entries = {{{0, 1}, "b0"}, {{0, 2}, "b1"}};
  PlacementPlan plan = plan_block_placements(shape, 2);
  REQUIRE(plan.ok);
  REQUIRE(plan.roles.size() == 2);
  CHECK(plan.roles[0].stance == Coord{0, 0});
  CHECK(plan.roles[0].shape_entry == Coord{0, 1});
  CHECK(plan.roles[0].block_type == "b0");
  CHECK(plan.roles[1].shape_entry == Coord{0, 2});
  CHECK(plan.roles[1].block_type == "b1");
  // The lieutenant stands clear of the structure and of the commander.
  CHECK_FALSE(plan.roles[1].stance == Coord{0, 0});
  CHECK_FALSE(plan.roles[1].stance == Coord{0, 1});
  CHECK_FALSE(plan.roles[1].stance == Coord{0, 2});
  CHECK(replay_placement(shape, plan));
}

TEST_CASE("degenerate one-block task is commander-only") {
  TaskShape shape;
  shape.entries = {{{1, 0}, "b0"}};
  PlacementPlan plan = plan_block_placements(shape, 1);
  REQUIRE(plan.ok);
  CHECK(plan.roles.size() == 1);
  CHECK(replay_placement(shape, plan));
}

TEST_CASE("mismatched agent count is rejected") {
  TaskShape shape;
  shape.entries = {{{0, 1}, "b0"}, {{0, 2}, "b0"}};
  CHECK_FALSE(plan_block_placements(shape, 3).ok);
}

TEST_CASE("generator covers every 2, 3 and 4 block shape") {
  // Replay-verified coverage; class counts at least match the published
  // 3/10/29 enumeration split.
  const std::vector<std::pair<int, int>> sizes{{2, 3}, {3, 10}, {4, 29}};
  for (const auto& [k, classes] : sizes) {
    auto shapes = oracle::enumerate_shapes(k, "b0");
    CHECK(oracle::count_rotation_classes(shapes) >= classes);
    int handled = 0;
    for (const TaskShape& shape : shapes) {
      PlacementPlan plan = plan_block_placements(shape, k);
      REQUIRE_MESSAGE(plan.ok, "no placement for a ", k, "-block shape");
      if (replay_placement(shape, plan)) ++handled;
    }
    CHECK(handled == static_cast<int>(shapes.size()));
  }
}

TEST_CASE("walk goals land inside the configured distance band") {
  GroupMap m = known_grid(9, 9);
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    WalkGoal goal = walk_sync_goal(m, {4, 4}, rng, 5, 15, 2500);
    int d = manhattan(goal.target, {4, 4});
    CHECK(d >= 5);
    CHECK(d <= 15);
  }
}

TEST_CASE("search and destroy picks the nearest obstacle and charges it") {
  GroupMap m = known_grid(9, 9);
  m.knowledge[{6, 4}].terrain = TerrainBelief::Obstacle;
  m.knowledge[{1, 1}].terrain = TerrainBelief::Obstacle;
  SimRules rules;
  ClearGoal goal = search_destroy_goal(m, {4, 4}, rules.max_energy, rules, 2500);
  REQUIRE(goal.ok);
  CHECK(goal.obstacle == Coord{6, 4});
  int clears = 0;
  for (const Action& a : goal.actions) {
    if (a.kind == ActionKind::Clear) ++clears;
  }
  CHECK(clears == rules.clear_charge_steps);
}

TEST_CASE("search and destroy reports failure honestly") {
  GroupMap empty = known_grid(5, 5);
  SimRules rules;
  ClearGoal none = search_destroy_goal(empty, {2, 2}, rules.max_energy, rules, 2500);
  CHECK_FALSE(none.ok);
  CHECK(none.why == FailReason::InvalidTarget);

  GroupMap m = known_grid(5, 5);
  m.knowledge[{4, 2}].terrain = TerrainBelief::Obstacle;
  ClearGoal drained = search_destroy_goal(m, {2, 2}, 0, rules, 2500);
  CHECK_FALSE(drained.ok);
  CHECK(drained.why == FailReason::InsufficientEnergy);
}

TEST_CASE("unsynchronized idle agents walk, a synchronized team clears") {
  SimRules rules;
  WorldState w = make_world(20, 20, rules);
  // Far apart: no sync, so every dispatch is a random traversal.
  AgentId a0 = add_agent(w, "A", {2, 2});
  AgentId a1 = add_agent(w, "A", {17, 17});
  TeamContext ctx{"A", {a0, a1}, rules, 5};
  auto engine = make_desouches(ctx, {});
  std::map<AgentId, Percept> percepts;
  for (const auto& ag : w.agents) percepts.emplace(ag.id, gen_percept(w, ag.id));
  StepBudget budget = StepBudget::unlimited();
  EventSink sink(1);
  auto actions = engine->step(percepts, budget, sink);
  int moves = 0;
  for (const auto& [id, act] : actions) {
    if (act.kind == ActionKind::Move) ++moves;
  }
  CHECK(moves == 2);
  CHECK(engine->registry()->groups.size() == 2);

  // One agent alone is trivially synchronized; give it an obstacle to clear.
  WorldState w2 = make_world(12, 12, rules);
  AgentId solo = add_agent(w2, "B", {5, 5});
  w2.cell({7, 5}).kind = CellKind::Obstacle;
  TeamContext ctx2{"B", {solo}, rules, 6};
  auto engine2 = make_desouches(ctx2, {});
  std::map<AgentId, Percept> p2;
  p2.emplace(solo, gen_percept(w2, solo));
  bool cleared = false;
  for (int s = 0; s < 12 && !cleared; ++s) {
    StepBudget b2 = StepBudget::unlimited();
    EventSink sink2(1);
    auto acts = engine2->step(p2, b2, sink2);
    auto out = step_world(w2, acts);
    p2 = std::move(out.percepts);
    if (w2.cell({7, 5}).kind == CellKind::Free) cleared = true;
  }
  CHECK(cleared);
}

TEST_CASE("scripted blocks scenario completes with commander submitting") {
  // Known dispensers and goal from the start; one 2-block task. The pair must
  // synchronize, become the mastergroup, build and submit within 150 steps.
  SimRules rules;
  WorldState w = make_world(14, 14, rules);
  AgentId a0 = add_agent(w, "A", {5, 5});
  AgentId a1 = add_agent(w, "A", {8, 5});
  w.cell({3, 5}).kind = CellKind::Dispenser;
  w.cell({3, 5}).dispenser_type = "b0";
  w.cell({7, 8}).kind = CellKind::Dispenser;
  w.cell({7, 8}).dispenser_type = "b1";
  for (int y = 2; y <= 4; ++y) w.cell({10, y}).kind = CellKind::Goal;
  Task t;
  t.name = "t0";
  t.reward = 20;
  t.deadline = 300;
  t.shape.entries = {{{0, 1}, "b0"}, {{0, 2}, "b1"}};
  w.tasks.push_back(t);

  TeamContext ctx{"A", {a0, a1}, rules, 11};
  auto engine = make_desouches(ctx, {});
  std::map<AgentId, Percept> percepts;
  for (const auto& ag : w.agents) percepts.emplace(ag.id, gen_percept(w, ag.id));

  bool submitted = false;
  int submit_step = -1;
  std::set<AgentId> detachers, submitters;
  for (int s = 0; s < 150 && !submitted; ++s) {
    StepBudget budget = StepBudget::unlimited();
    EventSink sink(1);
    auto actions = engine->step(percepts, budget, sink);
    for (const auto& [id, act] : actions) {
      if (act.kind == ActionKind::Detach) detachers.insert(id);
      if (act.kind == ActionKind::Submit) submitters.insert(id);
    }
    auto out = step_world(w, actions);
    percepts = std::move(out.percepts);
    for (const auto& ev : out.events) {
      if (ev.kind == WorldEvent::Kind::Submitted) {
        submitted = true;
        submit_step = s;
      }
    }
  }
  REQUIRE(submitted);
  CHECK(submit_step < 150);
  CHECK(w.scores["A"] == 20);
  // The mastergroup was designated and survived.
  REQUIRE(engine->registry()->master_group.has_value());
  // Exactly one agent submits; the other detaches and never submits.
  CHECK(submitters.size() == 1);
  REQUIRE(detachers.size() >= 1);
  for (AgentId d : detachers) {
    if (submitters.count(d) == 0) {
      // the lieutenant: detached, never submitted
      CHECK(true);
    }
  }
  CHECK_FALSE(submitters.empty());
}

TEST_CASE("deadline lapse disbands the team for new orders") {
  SimRules rules;
  WorldState w = make_world(14, 14, rules);
  AgentId a0 = add_agent(w, "A", {5, 5});
  AgentId a1 = add_agent(w, "A", {8, 5});
  w.cell({3, 5}).kind = CellKind::Dispenser;
  w.cell({3, 5}).dispenser_type = "b0";
  w.cell({10, 3}).kind = CellKind::Goal;
  Task t;
  t.name = "t0";
  t.reward = 20;
  t.deadline = 4;  // hopelessly tight
  t.shape.entries = {{{0, 1}, "b0"}, {{0, 2}, "b0"}};
  w.tasks.push_back(t);

  TeamContext ctx{"A", {a0, a1}, rules, 12};
  auto engine = make_desouches(ctx, {});
  std::map<AgentId, Percept> percepts;
  for (const auto& ag : w.agents) percepts.emplace(ag.id, gen_percept(w, ag.id));
  bool assigned = false, disbanded = false;
  for (int s = 0; s < 12; ++s) {
    StepBudget budget = StepBudget::unlimited();
    EventSink sink(1);
    auto actions = engine->step(percepts, budget, sink);
    for (const auto& ev : sink.drain()) {
      if (ev.kind == "scenario") {
        for (const auto& [k, v] : ev.fields) {
          if (k == "event" && std::holds_alternative<std::string>(v)) {
            if (std::get<std::string>(v) == "assigned") assigned = true;
            if (std::get<std::string>(v) == "disband") disbanded = true;
          }
        }
      }
    }
    auto out = step_world(w, actions);
    percepts = std::move(out.percepts);
  }
  CHECK(assigned);
  CHECK(disbanded);
  CHECK(w.scores["A"] == 0);
}

}
