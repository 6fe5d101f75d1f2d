#include "mapcsim/desouches.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>

namespace mapcsim {

const char* auto_state_str(AutoState s) {
  switch (s) {
    case AutoState::GoToDispenser: return "go_to_dispenser";
    case AutoState::GetBlock: return "get_block";
    case AutoState::GoToGoalPosition: return "go_to_goal_position";
    case AutoState::RotateBlock: return "rotate_block";
    case AutoState::Connect: return "connect";
    case AutoState::Detach: return "detach";
    case AutoState::Submit: return "submit";
    case AutoState::Done: return "done";
    case AutoState::Failed: return "failed";
  }
  return "?";
}

AutoState step_automaton(ScenarioAutomaton& a, AutoEvent ev) {
  if (a.state == AutoState::Done || a.state == AutoState::Failed) return a.state;

  if (ev == AutoEvent::BlockLost) {
    a.state = AutoState::GoToDispenser;
    a.failures = 0;
    a.detour = false;
    return a.state;
  }

  if (a.detour) {
    // The detour traversal ended either way; retry the dispenser approach.
    a.detour = false;
    a.state = AutoState::GoToDispenser;
    return a.state;
  }

  if (ev == AutoEvent::GoalFailed) {
    a.failures += 1;
    if (a.failures >= a.retry_cap) {
      a.state = AutoState::Failed;
    } else if (a.state == AutoState::GoToDispenser) {
      a.detour = true;  // random traversal first, then try again
    }
    return a.state;
  }

  // GoalSucceeded advances the chain.
  a.failures = 0;
  switch (a.state) {
    case AutoState::GoToDispenser: a.state = AutoState::GetBlock; break;
    case AutoState::GetBlock: a.state = AutoState::GoToGoalPosition; break;
    case AutoState::GoToGoalPosition: a.state = AutoState::RotateBlock; break;
    case AutoState::RotateBlock: a.state = AutoState::Connect; break;
    case AutoState::Connect:
      a.state = a.commander ? AutoState::Submit : AutoState::Detach;
      break;
    case AutoState::Detach: a.state = AutoState::Done; break;
    case AutoState::Submit: a.state = AutoState::Done; break;
    case AutoState::Done:
    case AutoState::Failed:
      break;
  }
  return a.state;
}

PlacementPlan plan_block_placements(const TaskShape& shape, int k) {
  PlacementPlan plan;
  if (static_cast<int>(shape.entries.size()) != k || k < 1 || !shape.valid()) {
    plan.error = "shape/agent count mismatch";
    return plan;
  }

  std::set<Coord> entry_cells;
  for (const auto& e : shape.entries) entry_cells.insert(e.pos);

  double cx = 0, cy = 0;
  for (const auto& e : shape.entries) {
    cx += e.pos.x;
    cy += e.pos.y;
  }
  cx /= k;
  cy /= k;

  auto type_of = [&](const Coord& c) {
    for (const auto& e : shape.entries)
      if (e.pos == c) return e.type;
    return BlockType{};
  };

  // Candidate commander entries: the ones adjacent to the submit stance.
  std::vector<Coord> commander_options;
  for (const auto& e : shape.entries) {
    if (manhattan(e.pos) == 1) commander_options.push_back(e.pos);
  }

  for (const Coord& e_c : commander_options) {
    // Build order: peel entries reachable from the growing structure, falling
    // back to origin-adjacent deliveries.
    std::vector<Coord> order{e_c};
    std::set<Coord> placed{e_c};
    std::vector<BlockRole::Join> joins{BlockRole::Join::ConnectToStructure};  // unused for [0]
    std::vector<Coord> named{{0, 0}};
    bool order_ok = true;
    while (static_cast<int>(order.size()) < k) {
      Coord pick{};
      bool found = false;
      BlockRole::Join join = BlockRole::Join::ConnectToStructure;
      Coord named_cell{};
      for (const auto& e : shape.entries) {  // sorted, so smallest qualifying wins
        if (placed.count(e.pos)) continue;
        for (const Coord& p : placed) {
          if (manhattan(e.pos, p) == 1) {
            pick = e.pos;
            named_cell = p;
            join = BlockRole::Join::ConnectToStructure;
            found = true;
            break;
          }
        }
        if (found) break;
      }
      if (!found) {
        for (const auto& e : shape.entries) {
          if (placed.count(e.pos)) continue;
          if (manhattan(e.pos) == 1) {
            pick = e.pos;
            join = BlockRole::Join::DeliverForAttach;
            found = true;
            break;
          }
        }
      }
      if (!found) {
        order_ok = false;
        break;
      }
      order.push_back(pick);
      placed.insert(pick);
      joins.push_back(join);
      named.push_back(named_cell);
    }
    if (!order_ok) continue;

    // Stances: backtracking over facing directions, preferring outward ones.
    std::vector<Coord> stances(static_cast<size_t>(k));
    std::vector<Dir> dirs(static_cast<size_t>(k), Dir::North);
    stances[0] = {0, 0};
    Dir cd;
    if (!dir_from_offset(order[0], cd)) continue;
    dirs[0] = cd;

    std::set<Coord> taken{{0, 0}};
    std::function<bool(int)> assign = [&](int i) -> bool {
      if (i >= k) return true;
      Coord entry = order[static_cast<size_t>(i)];
      std::vector<Dir> options(kAllDirs.begin(), kAllDirs.end());
      std::sort(options.begin(), options.end(), [&](Dir a, Dir b) {
        Coord sa = entry - offset(a), sb = entry - offset(b);
        double da = (sa.x - cx) * (sa.x - cx) + (sa.y - cy) * (sa.y - cy);
        double db = (sb.x - cx) * (sb.x - cx) + (sb.y - cy) * (sb.y - cy);
        if (da != db) return da > db;  // stand away from the structure
        return static_cast<int>(a) < static_cast<int>(b);
      });
      for (Dir d : options) {
        Coord s = entry - offset(d);
        if (entry_cells.count(s) || taken.count(s)) continue;
        taken.insert(s);
        stances[static_cast<size_t>(i)] = s;
        dirs[static_cast<size_t>(i)] = d;
        if (assign(i + 1)) return true;
        taken.erase(s);
      }
      return false;
    };
    if (!assign(1)) continue;

    plan.ok = true;
    plan.roles.clear();
    for (int i = 0; i < k; ++i) {
      BlockRole role;
      role.block_type = type_of(order[static_cast<size_t>(i)]);
      role.shape_entry = order[static_cast<size_t>(i)];
      role.stance = stances[static_cast<size_t>(i)];
      role.carried_dir = dirs[static_cast<size_t>(i)];
      role.join = i == 0 ? BlockRole::Join::ConnectToStructure : joins[static_cast<size_t>(i)];
      role.commander_named = named[static_cast<size_t>(i)];
      role.connect_order = i;
      plan.roles.push_back(role);
    }
    return plan;
  }
  plan.error = "no satisfiable stance assignment";
  return plan;
}

WalkGoal walk_sync_goal(const GroupMap& map, const Coord& from, Rng& rng, int d_min, int d_max,
                        int max_iterations) {
  WalkGoal goal;
  Dir d = kAllDirs[rng.bounded(4)];
  int dist = rng.range(d_min, d_max);
  goal.target = from + Coord{offset(d).x * dist, offset(d).y * dist};

  PathQuery q;
  q.start = from;
  q.goal_cells = {goal.target};
  q.max_iterations = max_iterations;
  int now = 0;
  for (const auto& [_, c] : map.knowledge) now = std::max(now, c.last_seen);
  q.now = now;
  q.ignore_cells = {from};
  goal.path = a_star(map, q);
  return goal;
}

ClearGoal search_destroy_goal(const GroupMap& map, const Coord& from, int energy,
                              const SimRules& rules, int max_iterations) {
  ClearGoal goal;
  if (energy < rules.clear_cost) {
    goal.why = FailReason::InsufficientEnergy;
    return goal;
  }
  int now = 0;
  for (const auto& [_, c] : map.knowledge) now = std::max(now, c.last_seen);

  std::vector<Coord> obstacles;
  for (const auto& [pos, cell] : map.knowledge) {
    if (cell.terrain == TerrainBelief::Obstacle) obstacles.push_back(pos);
  }
  if (obstacles.empty()) {
    goal.why = FailReason::InvalidTarget;
    return goal;
  }
  std::sort(obstacles.begin(), obstacles.end(), [&](const Coord& a, const Coord& b) {
    int da = manhattan(a, from), db = manhattan(b, from);
    if (da != db) return da < db;
    return a < b;
  });

  for (size_t i = 0; i < obstacles.size() && i < 3; ++i) {
    const Coord obst = obstacles[i];
    std::vector<Coord> ring;
    for (int dy = -rules.clear_range; dy <= rules.clear_range; ++dy) {
      for (int dx = -rules.clear_range; dx <= rules.clear_range; ++dx) {
        int d = std::abs(dx) + std::abs(dy);
        if (d < 1 || d > rules.clear_range) continue;
        ring.push_back(obst + Coord{dx, dy});
      }
    }
    PathQuery q;
    q.start = from;
    q.goal_cells = ring;
    q.max_iterations = max_iterations;
    q.now = now;
    q.ignore_cells = {from};
    PathResult path = a_star(map, q);
    if (!path.found()) continue;
    Coord end = from;
    for (const Action& a : path.actions)
      if (a.kind == ActionKind::Move) end += offset(a.dir);
    goal.ok = true;
    goal.obstacle = obst;
    goal.actions = path.actions;
    for (int c = 0; c < rules.clear_charge_steps; ++c) {
      goal.actions.push_back(Action::clear(obst - end));
    }
    return goal;
  }
  goal.why = FailReason::InvalidTarget;
  return goal;
}

namespace {

enum class Assignment : std::uint8_t { Idle, WalkSync, SearchDestroy, Blocks };

struct Executor {
  AutoState for_state = AutoState::GoToDispenser;
  bool detour = false;
  std::deque<Action> plan;
  bool waiting = false;  // handshaking goals idle until their turn
  bool acted = false;    // an action of this plan was issued last step
};

struct BlocksScenario {
  int id = 0;
  std::string task_name;
  int deadline = 0;
  std::vector<AgentId> members;  // [0] commander
  std::vector<BlockRole> roles;
  Coord goal_cell;  // commander stance in the mastergroup frame
  int next_join = 1;
  bool done = false;
  std::map<AgentId, ScenarioAutomaton> autos;

  int role_index(AgentId id) const {
    for (size_t i = 0; i < members.size(); ++i)
      if (members[i] == id) return static_cast<int>(i);
    return -1;
  }
};

class DeSouches final : public TeamEngine {
 public:
  DeSouches(const TeamContext& ctx, const DeSouchesConfig& cfg)
      : ctx_(ctx), cfg_(cfg), reg_(SyncRegistry::singletons(ctx.agents)), rng_(ctx.seed) {
    for (AgentId id : ctx.agents) soldiers_[id] = {};
  }

  const SyncRegistry* registry() const override { return &reg_; }

  std::map<AgentId, Action> step(const std::map<AgentId, Percept>& percepts, StepBudget& budget,
                                 EventSink& sink) override {
    (void)budget;
    // Track confirmed results, then synchronize and integrate.
    for (AgentId id : ctx_.agents) {
      auto pit = percepts.find(id);
      if (pit == percepts.end()) continue;
      Soldier& s = soldiers_[id];
      if (!s.last_action) continue;
      const ActionResult& res = pit->second.last_action_result;
      track_own_action(reg_.group_of(id), id, *s.last_action, res);
      if (s.last_action->kind == ActionKind::Move && res.outcome == ActionOutcome::Failed &&
          res.reason == FailReason::PathBlocked) {
        mark_blocked_move(reg_.group_of(id), id, s.last_action->dir, pit->second);
      }
    }
    for (const MergeRecord& rec : sync_step(reg_, percepts)) {
      sink.emit(TraceEvent{"sync", {}}
                    .with("team", ctx_.team)
                    .with("agent_a", rec.a)
                    .with("agent_b", rec.b)
                    .with("shift_x", rec.shift.x)
                    .with("shift_y", rec.shift.y)
                    .with("into_group", rec.into)
                    .with("absorbed_group", rec.absorbed)
                    .with("group_size", rec.group_size));
    }
    for (AgentId id : ctx_.agents) {
      auto pit = percepts.find(id);
      if (pit != percepts.end()) integrate_percept(reg_.group_of(id), id, pit->second);
    }

    process_feedback(percepts, sink);
    dispatch(percepts, sink);
    return decide_actions(percepts, sink);
  }

 private:
  struct Soldier {
    Assignment assignment = Assignment::Idle;
    int scenario = -1;
    std::optional<Action> last_action;
    std::optional<Executor> exec;
    bool had_block = false;
  };

  BlocksScenario* scenario_of(AgentId id) {
    Soldier& s = soldiers_[id];
    if (s.assignment != Assignment::Blocks) return nullptr;
    for (auto& sc : scenarios_)
      if (sc.id == s.scenario) return &sc;
    return nullptr;
  }

  void emit_scenario(EventSink& sink, const char* what, AgentId agent, const std::string& detail) {
    sink.emit(TraceEvent{"scenario", {}}
                  .with("team", ctx_.team)
                  .with("agent", agent)
                  .with("event", std::string(what))
                  .with("detail", detail));
  }

  // Applies last-step results to running goals and steps the automata.
  void process_feedback(const std::map<AgentId, Percept>& percepts, EventSink& sink) {
    for (AgentId id : ctx_.agents) {
      auto pit = percepts.find(id);
      if (pit == percepts.end()) continue;
      const Percept& p = pit->second;
      Soldier& s = soldiers_[id];
      BodyState body = derive_body(p);

      if (s.assignment == Assignment::Blocks) {
        BlocksScenario* sc = scenario_of(id);
        if (!sc) {
          s.assignment = Assignment::Idle;
          continue;
        }
        ScenarioAutomaton& autom = sc->autos.at(id);

        // A fully executed clear event strips the carried block.
        bool expects_block = autom.state == AutoState::GoToGoalPosition ||
                             autom.state == AutoState::RotateBlock ||
                             autom.state == AutoState::Connect ||
                             autom.state == AutoState::Submit;
        if (expects_block && s.had_block && body.carried.empty()) {
          step_automaton(autom, AutoEvent::BlockLost);
          s.exec.reset();
          s.had_block = false;
          emit_scenario(sink, "block_lost", id, auto_state_str(autom.state));
          continue;
        }
        s.had_block = !body.carried.empty();

        if (!s.exec || !s.exec->acted) continue;
        s.exec->acted = false;
        const ActionResult& res = p.last_action_result;
        if (res.outcome == ActionOutcome::Failed) {
          bool was_detour = s.exec->detour;
          s.exec.reset();
          if (was_detour) {
            step_automaton(autom, AutoEvent::GoalFailed);  // detour over, retry
          } else {
            AutoState st = step_automaton(autom, AutoEvent::GoalFailed);
            if (st == AutoState::Failed) emit_scenario(sink, "goal_failed_final", id, "");
          }
          continue;
        }
        if (res.outcome == ActionOutcome::Charging) continue;
        if (s.exec->plan.empty() && !s.exec->waiting) {
          bool was_detour = s.exec->detour;
          AutoState goal_state = s.exec->for_state;
          s.exec.reset();
          // The commander's Connect goal spans one join per lieutenant; it
          // only completes once the last one is in.
          if (!was_detour && goal_state == AutoState::Connect && autom.commander) {
            sc->next_join += 1;
            if (sc->next_join < static_cast<int>(sc->members.size())) {
              emit_scenario(sink, "join_done", id, std::to_string(sc->next_join - 1));
              continue;
            }
          }
          AutoState prev = autom.state;
          step_automaton(autom, AutoEvent::GoalSucceeded);
          if (!was_detour) {
            emit_scenario(sink, "goal_done", id, auto_state_str(prev));
          }
        }
      } else if (s.assignment == Assignment::WalkSync || s.assignment == Assignment::SearchDestroy) {
        if (!s.exec || !s.exec->acted) continue;
        s.exec->acted = false;
        const ActionResult& res = p.last_action_result;
        if (res.outcome == ActionOutcome::Failed) {
          emit_scenario(sink, "traversal_failed", id,
                        s.assignment == Assignment::WalkSync ? "walk_sync" : "search_destroy");
          s.exec.reset();
          s.assignment = Assignment::Idle;
        } else if (res.outcome == ActionOutcome::Success && s.exec->plan.empty()) {
          emit_scenario(sink, "traversal_done", id,
                        s.assignment == Assignment::WalkSync ? "walk_sync" : "search_destroy");
          s.exec.reset();
          s.assignment = Assignment::Idle;
        }
      }
    }

    // Scenario-level completion and deadline handling.
    int step_now = percepts.empty() ? 0 : percepts.begin()->second.step;
    std::set<std::string> active_tasks;
    if (!percepts.empty()) {
      for (const Task& t : percepts.begin()->second.tasks) active_tasks.insert(t.name);
    }
    for (auto it = scenarios_.begin(); it != scenarios_.end();) {
      BlocksScenario& sc = *it;
      bool all_done = true;
      bool any_failed = false;
      for (const auto& [id, autom] : sc.autos) {
        (void)id;
        if (autom.state != AutoState::Done) all_done = false;
        if (autom.state == AutoState::Failed) any_failed = true;
      }
      bool lapsed = step_now > sc.deadline || !active_tasks.count(sc.task_name);
      if (all_done || any_failed || lapsed) {
        const char* why = all_done ? "completed" : any_failed ? "failed" : "deadline_lapsed";
        for (AgentId id : sc.members) {
          soldiers_[id].assignment = Assignment::Idle;
          soldiers_[id].scenario = -1;
          soldiers_[id].exec.reset();
          emit_scenario(sink, "disband", id, why);
        }
        it = scenarios_.erase(it);
      } else {
        ++it;
      }
    }
  }

  bool group_knows_types(const GroupMap& map, const std::set<BlockType>& types) const {
    std::set<BlockType> known;
    for (const auto& [_, cell] : map.knowledge) {
      if (cell.terrain == TerrainBelief::Dispenser) known.insert(cell.dispenser_type);
    }
    for (const BlockType& t : types)
      if (!known.count(t)) return false;
    return true;
  }

  bool group_knows_goal(const GroupMap& map) const {
    for (const auto& [_, cell] : map.knowledge) {
      if (cell.terrain == TerrainBelief::Goal) return true;
    }
    return false;
  }

  void dispatch(const std::map<AgentId, Percept>& percepts, EventSink& sink) {
    if (percepts.empty()) return;
    std::vector<Task> tasks = percepts.begin()->second.tasks;
    std::sort(tasks.begin(), tasks.end(), [](const Task& a, const Task& b) {
      if (a.reward != b.reward) return a.reward > b.reward;
      if (a.deadline != b.deadline) return a.deadline < b.deadline;
      return a.name < b.name;
    });

    std::set<std::string> running;
    for (const BlocksScenario& sc : scenarios_) running.insert(sc.task_name);

    for (const Task& task : tasks) {
      if (running.count(task.name)) continue;
      int k = static_cast<int>(task.shape.entries.size());
      if (k < 1 || k > 4) continue;
      PlacementPlan placement = plan_block_placements(task.shape, k);
      if (!placement.ok) continue;

      std::set<BlockType> demanded;
      for (const auto& e : task.shape.entries) demanded.insert(e.type);

      // Mastergroup first; otherwise the first group knowing every demanded
      // dispenser type becomes the mastergroup.
      std::vector<GroupId> group_order;
      if (reg_.master_group) {
        group_order.push_back(*reg_.master_group);
      } else {
        for (const auto& [gid, _] : reg_.groups) group_order.push_back(gid);
      }
      for (GroupId gid : group_order) {
        const GroupMap& gmap = reg_.groups.at(gid);
        if (!group_knows_types(gmap, demanded)) continue;
        if (!group_knows_goal(gmap)) continue;
        std::vector<AgentId> free;
        for (const auto& [id, _] : gmap.members) {
          if (soldiers_[id].assignment != Assignment::Blocks) free.push_back(id);
        }
        if (static_cast<int>(free.size()) < k) continue;

        Coord goal_cell;
        if (!pick_goal_cell(gmap, placement, goal_cell)) continue;

        BlocksScenario sc;
        sc.id = next_scenario_id_++;
        sc.task_name = task.name;
        sc.deadline = task.deadline;
        sc.roles = placement.roles;
        sc.goal_cell = goal_cell;
        for (int i = 0; i < k; ++i) {
          AgentId id = free[static_cast<size_t>(i)];
          sc.members.push_back(id);
          ScenarioAutomaton autom;
          autom.commander = i == 0;
          autom.retry_cap = cfg_.retry_cap;
          sc.autos[id] = autom;
          soldiers_[id].assignment = Assignment::Blocks;
          soldiers_[id].scenario = sc.id;
          soldiers_[id].exec.reset();
          soldiers_[id].had_block = false;
          emit_scenario(sink, "assigned", id,
                        std::string(i == 0 ? "commander" : "lieutenant") + ":" + task.name);
        }
        if (!reg_.master_group) {
          reg_.master_group = gid;
          emit_scenario(sink, "mastergroup", sc.members.front(), std::to_string(gid));
        }
        scenarios_.push_back(std::move(sc));
        running.insert(task.name);
        break;
      }
    }

    // Remaining idle agents explore; a fully synchronized team clears instead.
    bool one_group = reg_.fully_synchronized();
    for (AgentId id : ctx_.agents) {
      Soldier& s = soldiers_[id];
      if (s.assignment != Assignment::Idle) continue;
      s.assignment = one_group ? Assignment::SearchDestroy : Assignment::WalkSync;
      s.exec.reset();
    }
  }

  bool pick_goal_cell(const GroupMap& gmap, const PlacementPlan& placement, Coord& out) const {
    int now = 0;
    for (const auto& [_, c] : gmap.knowledge) now = std::max(now, c.last_seen);
    std::vector<Coord> goals;
    for (const auto& [pos, cell] : gmap.knowledge) {
      if (cell.terrain == TerrainBelief::Goal) goals.push_back(pos);
    }
    for (const Coord& g : goals) {
      bool ok = true;
      auto check = [&](const Coord& c) {
        CellState s = gmap.state_at(c, now);
        if (s == CellState::Obstacle || s == CellState::BlockSeen) ok = false;
      };
      for (const BlockRole& role : placement.roles) {
        check(g + role.shape_entry);
        check(g + role.stance);
      }
      if (ok) {
        out = g;
        return true;
      }
    }
    return false;
  }

  // Pre-pass deciding which join handshake fires this step, per scenario.
  struct JoinPlan {
    AgentId commander = -1;
    AgentId lieutenant = -1;
    bool connect = false;   // mutual connect this step
    bool attach = false;    // commander attaches a delivered block
    Dir attach_dir = Dir::North;
    Coord commander_named, lieutenant_named;
  };

  std::map<int, JoinPlan> plan_joins(const std::map<AgentId, Percept>& percepts) {
    std::map<int, JoinPlan> out;
    for (BlocksScenario& sc : scenarios_) {
      if (sc.next_join >= static_cast<int>(sc.members.size())) continue;
      AgentId cmd = sc.members.front();
      if (sc.autos.at(cmd).state != AutoState::Connect) continue;
      AgentId lt = sc.members[static_cast<size_t>(sc.next_join)];
      const BlockRole& role = sc.roles[static_cast<size_t>(sc.next_join)];
      const ScenarioAutomaton& lt_auto = sc.autos.at(lt);

      JoinPlan jp;
      jp.commander = cmd;
      jp.lieutenant = lt;
      if (role.join == BlockRole::Join::ConnectToStructure) {
        if (lt_auto.state != AutoState::Connect) continue;
        jp.connect = true;
        jp.commander_named = role.commander_named;
        jp.lieutenant_named = offset(role.carried_dir);
        out[sc.id] = jp;
      } else {
        // Delivered block: wait until the lieutenant released it, then attach.
        if (lt_auto.state != AutoState::Done) continue;
        auto pit = percepts.find(cmd);
        if (pit == percepts.end()) continue;
        bool block_there = false;
        for (const Thing& t : pit->second.things) {
          if (t.kind == ThingKind::Block && t.rel == role.shape_entry &&
              t.block_type == role.block_type) {
            block_there = true;
          }
        }
        Dir d;
        if (!block_there || !dir_from_offset(role.shape_entry, d)) continue;
        jp.attach = true;
        jp.attach_dir = d;
        out[sc.id] = jp;
      }
    }
    return out;
  }

  std::map<AgentId, Action> decide_actions(const std::map<AgentId, Percept>& percepts,
                                           EventSink& sink) {
    std::map<AgentId, Action> actions;
    std::map<int, JoinPlan> joins = plan_joins(percepts);

    for (AgentId id : ctx_.agents) {
      auto pit = percepts.find(id);
      if (pit == percepts.end()) continue;
      const Percept& p = pit->second;
      Soldier& s = soldiers_[id];
      Action act = Action::skip();

      switch (s.assignment) {
        case Assignment::Idle:
          break;
        case Assignment::WalkSync:
        case Assignment::SearchDestroy:
          act = traversal_action(id, p, s, sink);
          break;
        case Assignment::Blocks:
          act = blocks_action(id, p, s, joins, sink);
          break;
      }
      actions[id] = act;
      s.last_action = act;
    }
    return actions;
  }

  Action traversal_action(AgentId id, const Percept& p, Soldier& s, EventSink& sink) {
    GroupMap& gmap = reg_.group_of(id);
    Coord pos = gmap.members.at(id);
    if (!s.exec) {
      Executor ex;
      if (s.assignment == Assignment::WalkSync) {
        WalkGoal goal = walk_sync_goal(gmap, pos, rng_, cfg_.walk_min, cfg_.walk_max,
                                       cfg_.max_iterations);
        if (!goal.path.found() || goal.path.actions.empty()) {
          emit_scenario(sink, "traversal_failed", id, "walk_sync");
          s.assignment = Assignment::Idle;
          return Action::skip();
        }
        for (const Action& a : goal.path.actions) ex.plan.push_back(a);
      } else {
        ClearGoal goal = search_destroy_goal(gmap, pos, p.energy, ctx_.rules, cfg_.max_iterations);
        if (!goal.ok) {
          emit_scenario(sink, "traversal_failed", id, "search_destroy");
          s.assignment = Assignment::Idle;
          return Action::skip();
        }
        for (const Action& a : goal.actions) ex.plan.push_back(a);
      }
      s.exec = std::move(ex);
    }
    if (s.exec->plan.empty()) {
      s.assignment = Assignment::Idle;
      return Action::skip();
    }
    Action act = s.exec->plan.front();
    s.exec->plan.pop_front();
    s.exec->acted = true;
    return act;
  }

  Action blocks_action(AgentId id, const Percept& p, Soldier& s,
                       const std::map<int, JoinPlan>& joins, EventSink& sink) {
    BlocksScenario* sc = scenario_of(id);
    if (!sc) return Action::skip();
    ScenarioAutomaton& autom = sc->autos.at(id);
    int ri = sc->role_index(id);
    const BlockRole& role = sc->roles.at(static_cast<size_t>(ri));
    GroupMap& gmap = reg_.group_of(id);
    Coord pos = gmap.members.at(id);
    BodyState body = derive_body(p);
    int now = p.step;

    if (autom.state == AutoState::Done || autom.state == AutoState::Failed) return Action::skip();

    // Pending detour takes over regardless of the automaton goal.
    if (autom.detour) {
      if (!s.exec || !s.exec->detour) {
        Executor ex;
        ex.detour = true;
        WalkGoal goal =
            walk_sync_goal(gmap, pos, rng_, cfg_.walk_min, cfg_.walk_max, cfg_.max_iterations);
        if (goal.path.found()) {
          for (const Action& a : goal.path.actions) ex.plan.push_back(a);
        }
        s.exec = std::move(ex);
      }
      if (s.exec->plan.empty()) {
        s.exec.reset();
        step_automaton(autom, AutoEvent::GoalSucceeded);  // detour over either way
        return Action::skip();
      }
      Action act = s.exec->plan.front();
      s.exec->plan.pop_front();
      s.exec->acted = true;
      return act;
    }

    auto fail_goal = [&]() {
      s.exec.reset();
      AutoState st = step_automaton(autom, AutoEvent::GoalFailed);
      if (st == AutoState::Failed) emit_scenario(sink, "goal_failed_final", id, "");
      return Action::skip();
    };

    switch (autom.state) {
      case AutoState::GoToDispenser: {
        if (s.exec && s.exec->for_state == AutoState::GoToDispenser) break;
        std::vector<Coord> targets;
        for (const auto& [cpos, cell] : gmap.knowledge) {
          if (cell.terrain == TerrainBelief::Dispenser && cell.dispenser_type == role.block_type)
            targets.push_back(cpos);
        }
        if (targets.empty()) return fail_goal();
        std::sort(targets.begin(), targets.end(), [&](const Coord& a, const Coord& b) {
          int da = manhattan(a, pos), db = manhattan(b, pos);
          if (da != db) return da < db;
          return a < b;
        });
        std::vector<Coord> adj;
        for (const Coord& t : targets)
          for (const Coord& d : neighbor_offsets()) adj.push_back(t + d);
        PathQuery q;
        q.start = pos;
        q.goal_cells = adj;
        q.max_iterations = cfg_.max_iterations;
        q.now = now;
        q.ignore_cells = {pos};
        PathResult path = a_star(gmap, q);
        if (!path.found()) return fail_goal();
        Executor ex;
        ex.for_state = AutoState::GoToDispenser;
        for (const Action& a : path.actions) ex.plan.push_back(a);
        if (ex.plan.empty()) {
          step_automaton(autom, AutoEvent::GoalSucceeded);
          return blocks_action(id, p, s, joins, sink);
        }
        s.exec = std::move(ex);
        break;
      }
      case AutoState::GetBlock: {
        if (s.exec && s.exec->for_state == AutoState::GetBlock) break;
        // Stand next to the dispenser; request then attach (attach only when a
        // block is already waiting on it).
        std::optional<Dir> dir;
        bool block_waiting = false;
        for (const Coord& d : neighbor_offsets()) {
          auto it = gmap.knowledge.find(pos + d);
          if (it == gmap.knowledge.end()) continue;
          if (it->second.terrain == TerrainBelief::Dispenser &&
              it->second.dispenser_type == role.block_type) {
            Dir dd;
            dir_from_offset(d, dd);
            dir = dd;
            block_waiting = it->second.block && now - it->second.block_seen <= gmap.stale_ttl;
            break;
          }
        }
        if (!dir) return fail_goal();
        Executor ex;
        ex.for_state = AutoState::GetBlock;
        if (!block_waiting) ex.plan.push_back(Action::request(*dir));
        ex.plan.push_back(Action::attach(*dir));
        s.exec = std::move(ex);
        break;
      }
      case AutoState::GoToGoalPosition: {
        if (s.exec && s.exec->for_state == AutoState::GoToGoalPosition) break;
        Coord target = sc->goal_cell + role.stance;
        Footprint fp;
        for (const auto& [off, _] : body.carried) fp.offsets.push_back(off);
        PathQuery q;
        q.start = pos;
        q.footprint = fp;
        q.goal_cells = {target};
        q.is_goal = [&, target](const Coord& c, int) { return c == target; };
        q.max_iterations = cfg_.max_iterations;
        q.now = now;
        std::set<Coord> own{pos};
        for (const auto& [off, _] : body.carried) own.insert(pos + off);
        q.ignore_cells = own;
        PathResult path = a_star(gmap, q);
        if (!path.found()) return fail_goal();
        Executor ex;
        ex.for_state = AutoState::GoToGoalPosition;
        for (const Action& a : path.actions) ex.plan.push_back(a);
        if (ex.plan.empty()) {
          step_automaton(autom, AutoEvent::GoalSucceeded);
          return blocks_action(id, p, s, joins, sink);
        }
        s.exec = std::move(ex);
        break;
      }
      case AutoState::RotateBlock: {
        if (s.exec && s.exec->for_state == AutoState::RotateBlock) break;
        if (body.carried.empty()) return fail_goal();
        Coord cur = body.carried.front().first;
        Coord want = offset(role.carried_dir);
        int turns = -1;
        for (int t = 0; t < 4; ++t) {
          if (rotate_cw(cur, t) == want) {
            turns = t;
            break;
          }
        }
        if (turns < 0) return fail_goal();
        Executor ex;
        ex.for_state = AutoState::RotateBlock;
        if (turns == 3) {
          ex.plan.push_back(Action::rotate(Rot::Ccw));
        } else {
          for (int t = 0; t < turns; ++t) ex.plan.push_back(Action::rotate(Rot::Cw));
        }
        if (ex.plan.empty()) {
          step_automaton(autom, AutoEvent::GoalSucceeded);
          return blocks_action(id, p, s, joins, sink);
        }
        s.exec = std::move(ex);
        break;
      }
      case AutoState::Connect: {
        auto jit = joins.find(sc->id);
        bool my_turn = jit != joins.end() &&
                       (jit->second.commander == id || jit->second.lieutenant == id);
        if (!my_turn) {
          // Delivered blocks need no action from the lieutenant at all.
          if (!autom.commander && role.join == BlockRole::Join::DeliverForAttach) {
            s.exec.reset();
            step_automaton(autom, AutoEvent::GoalSucceeded);
            return blocks_action(id, p, s, joins, sink);
          }
          return Action::skip();
        }
        const JoinPlan& jp = jit->second;
        Executor ex;
        ex.for_state = AutoState::Connect;
        ex.waiting = false;
        Action act = Action::skip();
        if (jp.connect) {
          if (autom.commander) {
            act = Action::connect(jp.lieutenant, jp.commander_named, jp.lieutenant_named);
          } else {
            act = Action::connect(jp.commander, jp.lieutenant_named, jp.commander_named);
          }
        } else if (jp.attach && autom.commander) {
          act = Action::attach(jp.attach_dir);
        } else {
          return Action::skip();
        }
        ex.acted = true;
        s.exec = std::move(ex);
        return act;
      }
      case AutoState::Detach: {
        if (s.exec && s.exec->for_state == AutoState::Detach) break;
        if (body.carried.empty()) {
          step_automaton(autom, AutoEvent::GoalSucceeded);
          return Action::skip();
        }
        // After a join the component spans both structures; release the block
        // this role carried, which still faces its assigned direction.
        Executor ex;
        ex.for_state = AutoState::Detach;
        ex.plan.push_back(Action::detach(role.carried_dir));
        s.exec = std::move(ex);
        break;
      }
      case AutoState::Submit: {
        if (body.connected_to_agent) return Action::skip();  // lieutenants still splitting off
        Executor ex;
        ex.for_state = AutoState::Submit;
        ex.plan.push_back(Action::submit(sc->task_name));
        s.exec = std::move(ex);
        break;
      }
      default:
        return Action::skip();
    }

    if (s.exec && !s.exec->plan.empty()) {
      Action act = s.exec->plan.front();
      s.exec->plan.pop_front();
      s.exec->acted = true;
      return act;
    }
    return Action::skip();
  }

  TeamContext ctx_;
  DeSouchesConfig cfg_;
  SyncRegistry reg_;
  Rng rng_;
  std::map<AgentId, Soldier> soldiers_;
  std::vector<BlocksScenario> scenarios_;
  int next_scenario_id_ = 0;
};

}  // namespace

std::unique_ptr<TeamEngine> make_desouches(const TeamContext& ctx, const DeSouchesConfig& cfg) {
  return std::make_unique<DeSouches>(ctx, cfg);
}

}  // namespace mapcsim
