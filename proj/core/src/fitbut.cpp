#include "mapcsim/fitbut.hpp"

#include <algorithm>
#include <cassert>

namespace mapcsim {

const char* plan_kind_str(PlanKind k) {
  switch (k) {
    case PlanKind::GoSubmit: return "go_submit";
    case PlanKind::Split: return "split";
    case PlanKind::Dodge: return "dodge";
    case PlanKind::GoConnect: return "go_connect";
    case PlanKind::Hoard: return "hoard";
    case PlanKind::Roam: return "roam";
    case PlanKind::GoNearSubmit: return "go_near_submit";
    case PlanKind::Dig: return "dig";
  }
  return "?";
}

std::vector<Coord> footprint_cells(const GroupAgentView& v) {
  // The agent's own cell stays first; reserve_action uses it as the pivot.
  std::vector<Coord> out{v.frame_pos};
  for (const Coord& off : v.body.component_offsets) out.push_back(v.frame_pos + off);
  std::sort(out.begin() + 1, out.end());
  return out;
}

namespace {

std::vector<Coord> known_cells_of(const GroupMap& map, TerrainBelief kind) {
  std::vector<Coord> out;
  for (const auto& [pos, cell] : map.knowledge) {
    if (cell.terrain == kind) out.push_back(pos);
  }
  return out;
}

Footprint footprint_of(const BodyState& body) {
  std::vector<Coord> blocks;
  for (const auto& [off, type] : body.carried) {
    (void)type;
    blocks.push_back(off);
  }
  return Footprint::with_blocks(blocks);
}

std::set<Coord> own_cells_set(const GroupAgentView& v) {
  auto cells = footprint_cells(v);
  return {cells.begin(), cells.end()};
}

// Final cell and orientation after replaying a path from (start, 0).
std::pair<Coord, int> replay_end(const Coord& start, const std::vector<Action>& actions) {
  Coord c = start;
  int o = 0;
  for (const Action& a : actions) {
    if (a.kind == ActionKind::Move) c += offset(a.dir);
    if (a.kind == ActionKind::Rotate) o = (o + (a.rot == Rot::Cw ? 1 : 3)) & 3;
  }
  return {c, o};
}

// Rotations r for which the carried structure equals the task shape exactly.
std::vector<int> matching_rotations(const std::vector<std::pair<Coord, BlockType>>& carried,
                                    const TaskShape& shape) {
  std::vector<int> out;
  if (carried.size() != shape.entries.size() || carried.empty()) return out;
  for (int r = 0; r < 4; ++r) {
    std::vector<TaskShapeEntry> rotated;
    for (const auto& [off, type] : carried) rotated.push_back({rotate_cw(off, r), type});
    std::sort(rotated.begin(), rotated.end());
    if (rotated == shape.entries) out.push_back(r);
  }
  return out;
}

struct Embedding {
  int rot = 0;
  Coord translate;
  std::vector<TaskShapeEntry> placed;  // sorted shape entries covered
};

// All rigid placements (rotation + translation, no reflection) of the carried
// structure onto distinct type-matching shape entries.
std::vector<Embedding> embeddings(const std::vector<std::pair<Coord, BlockType>>& carried,
                                  const TaskShape& shape) {
  std::vector<Embedding> out;
  if (carried.empty() || carried.size() > shape.entries.size()) return out;
  std::set<std::pair<int, Coord>> seen;
  for (int r = 0; r < 4; ++r) {
    std::vector<std::pair<Coord, BlockType>> rot;
    for (const auto& [off, type] : carried) rot.emplace_back(rotate_cw(off, r), type);
    for (const TaskShapeEntry& anchor : shape.entries) {
      for (const auto& [off, type] : rot) {
        (void)type;
        Coord t = anchor.pos - off;
        if (!seen.insert({r, t}).second) continue;
        std::vector<TaskShapeEntry> placed;
        bool ok = true;
        for (const auto& [o2, t2] : rot) {
          Coord target = o2 + t;
          auto it = std::find_if(shape.entries.begin(), shape.entries.end(),
                                 [&](const TaskShapeEntry& e) { return e.pos == target; });
          if (it == shape.entries.end() || it->type != t2) {
            ok = false;
            break;
          }
          placed.push_back(*it);
        }
        if (!ok) continue;
        std::sort(placed.begin(), placed.end());
        out.push_back({r, t, std::move(placed)});
      }
    }
  }
  return out;
}

bool entries_disjoint(const std::vector<TaskShapeEntry>& a, const std::vector<TaskShapeEntry>& b) {
  for (const auto& ea : a)
    for (const auto& eb : b)
      if (ea.pos == eb.pos) return false;
  return true;
}

bool entries_adjacent(const std::vector<TaskShapeEntry>& a, const std::vector<TaskShapeEntry>& b) {
  for (const auto& ea : a)
    for (const auto& eb : b)
      if (manhattan(ea.pos, eb.pos) == 1) return true;
  return false;
}

bool stance_area_clear(const GroupMap& map, const Coord& cell, int now,
                       const std::set<Coord>& ignore) {
  if (ignore.count(cell)) return true;
  if (map.move_blocked(cell, now)) return false;
  CellState s = map.state_at(cell, now);
  return s != CellState::Obstacle && s != CellState::BlockSeen;
}

struct PendingCandidate {
  CandidateStructure c;
  const GroupAgentView* va = nullptr;
  const GroupAgentView* vb = nullptr;
  int estimate = 0;
  // Both agents' current cells plus both final placements; the partner moves
  // away by connect time, so its remembered blocks must not veto the route.
  std::set<Coord> shared_ignore;
};

// Total order used for both trimming and final greedy selection.
bool candidate_better(const CandidateStructure& x, const CandidateStructure& y) {
  if (x.metric != y.metric) return x.metric > y.metric;
  if (x.structure_size != y.structure_size) return x.structure_size < y.structure_size;
  if (x.task_name != y.task_name) return x.task_name < y.task_name;
  if (x.agent_a != y.agent_a) return x.agent_a < y.agent_a;
  if (x.agent_b != y.agent_b) return x.agent_b < y.agent_b;
  if (!(x.stance_a == y.stance_a)) return x.stance_a < y.stance_a;
  return x.stance_b < y.stance_b;
}

OptionPlan make_connect_plan(const CandidateStructure& cand, bool keeper_side,
                             const std::vector<Action>& own_path,
                             const std::vector<Action>& partner_path) {
  OptionPlan plan;
  plan.kind = PlanKind::GoConnect;
  plan.task_name = cand.task_name;
  plan.partner = keeper_side ? cand.agent_b : cand.agent_a;
  plan.target = keeper_side ? cand.stance_a : cand.stance_b;
  plan.split_after = !keeper_side;
  plan.actions = own_path;
  if (plan.actions.empty()) {
    if (partner_path.empty()) {
      Coord own = keeper_side ? cand.named_a : cand.named_b;
      Coord theirs = keeper_side ? cand.named_b : cand.named_a;
      plan.actions.push_back(Action::connect(plan.partner, own, theirs));
    } else {
      plan.actions.push_back(Action::skip());  // in place, partner still travelling
    }
  } else {
    Coord own = keeper_side ? cand.named_a : cand.named_b;
    Coord theirs = keeper_side ? cand.named_b : cand.named_a;
    plan.actions.push_back(Action::connect(plan.partner, own, theirs));
  }
  return plan;
}

}  // namespace

std::vector<OptionPlan> compute_local_options(const GroupMap& map, const GroupAgentView& agent,
                                              const Percept& percept, const SimRules& rules,
                                              const ReasonerConfig& cfg) {
  std::vector<OptionPlan> out;
  const int now = percept.step;
  const Footprint fp = footprint_of(agent.body);
  const std::set<Coord> own = own_cells_set(agent);

  // Dodge: any body cell under a pending clear marker.
  std::set<Coord> danger;
  for (const Thing& t : percept.things) {
    if (t.kind == ThingKind::ClearMarker) danger.insert(agent.frame_pos + t.rel);
  }
  bool endangered = false;
  for (const Coord& c : footprint_cells(agent)) {
    if (danger.count(c)) {
      endangered = true;
      break;
    }
  }
  if (endangered) {
    PathResult esc = escape_path(map, agent.frame_pos, fp, danger, own, now);
    if (esc.found() && !esc.actions.empty()) {
      OptionPlan plan;
      plan.kind = PlanKind::Dodge;
      plan.actions = esc.actions;
      out.push_back(std::move(plan));
    }
  }

  // GoNearSubmit: path toward the nearest remembered goal cell.
  std::vector<Coord> goals = known_cells_of(map, TerrainBelief::Goal);
  if (!goals.empty()) {
    PathQuery q;
    q.start = agent.frame_pos;
    q.footprint = fp;
    q.goal_cells = goals;
    q.ignore_cells = own;
    q.max_iterations = cfg.max_iterations;
    q.now = now;
    PathResult path = a_star(map, q);
    if (path.found() && !path.actions.empty()) {
      OptionPlan plan;
      plan.kind = PlanKind::GoNearSubmit;
      plan.actions = path.actions;
      plan.target = goals.front();
      out.push_back(std::move(plan));
    }
  }

  // Dig: clear the nearest remembered obstacle; dropped while Dodge exists.
  if (!endangered && agent.body.energy >= rules.clear_cost) {
    std::vector<Coord> obstacles = known_cells_of(map, TerrainBelief::Obstacle);
    std::sort(obstacles.begin(), obstacles.end(), [&](const Coord& a, const Coord& b) {
      int da = manhattan(a, agent.frame_pos), db = manhattan(b, agent.frame_pos);
      if (da != db) return da < db;
      return a < b;
    });
    int attempts = 0;
    for (const Coord& obst : obstacles) {
      if (attempts++ >= 3) break;
      std::vector<Coord> ring;
      for (int dy = -rules.clear_range; dy <= rules.clear_range; ++dy) {
        for (int dx = -rules.clear_range; dx <= rules.clear_range; ++dx) {
          int d = std::abs(dx) + std::abs(dy);
          if (d < 1 || d > rules.clear_range) continue;
          ring.push_back(obst + Coord{dx, dy});
        }
      }
      PathQuery q;
      q.start = agent.frame_pos;
      q.footprint = fp;
      q.goal_cells = ring;
      q.ignore_cells = own;
      q.max_iterations = cfg.max_iterations;
      q.now = now;
      PathResult path = a_star(map, q);
      if (!path.found()) continue;
      auto [end, orient] = replay_end(agent.frame_pos, path.actions);
      (void)orient;
      OptionPlan plan;
      plan.kind = PlanKind::Dig;
      plan.actions = path.actions;
      plan.actions.push_back(Action::clear(obst - end));
      plan.target = obst;
      out.push_back(std::move(plan));
      break;
    }
  }
  return out;
}

AssembleResult assemble_tasks(const GroupMap& map, const std::vector<GroupAgentView>& agents,
                              const std::vector<Task>& tasks, const ReasonerConfig& cfg,
                              StepBudget& budget) {
  AssembleResult result;
  const int now = [&] {
    int best = 0;
    for (const auto& [_, c] : map.knowledge) best = std::max(best, c.last_seen);
    return best;
  }();

  std::vector<Coord> goals = known_cells_of(map, TerrainBelief::Goal);
  if (goals.empty() || tasks.empty()) return result;

  // Duplicate shapes add work but no options; keep the one expiring first.
  std::vector<Task> ordered_tasks = tasks;
  std::sort(ordered_tasks.begin(), ordered_tasks.end(), [](const Task& a, const Task& b) {
    if (a.reward != b.reward) return a.reward > b.reward;
    if (a.deadline != b.deadline) return a.deadline < b.deadline;
    return a.name < b.name;
  });
  {
    std::set<std::vector<TaskShapeEntry>> seen_shapes;
    std::vector<Task> unique;
    for (Task& t : ordered_tasks) {
      if (seen_shapes.insert(t.shape.entries).second) unique.push_back(std::move(t));
    }
    ordered_tasks = std::move(unique);
  }

  // Step 1: every agent enters the connection candidates set.
  std::set<AgentId> ccs;
  std::map<AgentId, const GroupAgentView*> view_of;
  for (const GroupAgentView& v : agents) {
    ccs.insert(v.body.id);
    view_of[v.body.id] = &v;
  }

  // Step 2: agents already holding a full task structure with a route to a
  // goal get a submit plan and leave the set.
  for (const GroupAgentView& v : agents) {
    if (v.body.carried.empty()) continue;
    if (!budget.spend()) return result;
    for (const Task& t : ordered_tasks) {
      std::vector<int> rots = matching_rotations(v.body.carried, t.shape);
      if (rots.empty()) continue;
      PathQuery q;
      q.start = v.frame_pos;
      q.footprint = footprint_of(v.body);
      q.goal_cells = goals;
      // Terrain belief, not the flattened state: the agent's own carried
      // blocks may sit on goal cells and shadow them.
      q.is_goal = [&](const Coord& c, int o) {
        auto it = map.knowledge.find(c);
        if (it == map.knowledge.end() || it->second.terrain != TerrainBelief::Goal) return false;
        return std::find(rots.begin(), rots.end(), o) != rots.end();
      };
      q.ignore_cells = own_cells_set(v);
      q.max_iterations = cfg.max_iterations;
      q.now = now;
      PathResult path = a_star(map, q);
      budget.spend(static_cast<std::uint64_t>(path.iterations));
      if (!path.found()) continue;
      OptionPlan plan;
      plan.kind = PlanKind::GoSubmit;
      plan.task_name = t.name;
      plan.actions = path.actions;
      plan.actions.push_back(Action::submit(t.name));
      result.plans[v.body.id] = std::move(plan);
      ccs.erase(v.body.id);
      break;
    }
  }

  // Step 3: order the carrying agents from most to least complete, weighted
  // by task value.
  std::vector<AgentId> holders;
  for (const GroupAgentView& v : agents) {
    if (ccs.count(v.body.id) && !v.body.carried.empty()) holders.push_back(v.body.id);
  }
  auto completeness = [&](AgentId id) {
    const auto& carried = view_of.at(id)->body.carried;
    double best = 0;
    for (const Task& t : ordered_tasks) {
      if (embeddings(carried, t.shape).empty()) continue;
      double freq = static_cast<double>(carried.size()) / t.shape.entries.size();
      best = std::max(best, freq * t.reward);
    }
    return best;
  };
  std::sort(holders.begin(), holders.end(), [&](AgentId a, AgentId b) {
    double ca = completeness(a), cb = completeness(b);
    if (ca != cb) return ca > cb;
    return a < b;
  });

  // Step 4: per task, every ordered pair of holders and every non-overlapping
  // connected placement of their structures.
  std::vector<PendingCandidate> pending;
  for (const Task& task : ordered_tasks) {
    std::vector<PendingCandidate> per_task;
    for (size_t i = 0; i < holders.size(); ++i) {
      for (size_t j = i + 1; j < holders.size(); ++j) {
        const GroupAgentView& va = *view_of.at(holders[i]);
        const GroupAgentView& vb = *view_of.at(holders[j]);
        if (!budget.spend()) break;
        int size = static_cast<int>(va.body.carried.size() + vb.body.carried.size()) + 2;
        if (size > cfg.max_structure_size) continue;

        auto em_a = embeddings(va.body.carried, task.shape);
        auto em_b = embeddings(vb.body.carried, task.shape);
        for (const Embedding& ea : em_a) {
          for (const Embedding& eb : em_b) {
            if (!entries_disjoint(ea.placed, eb.placed)) continue;
            if (!entries_adjacent(ea.placed, eb.placed)) continue;

            // Meeting anchored at the keeper's current cell, falling back to
            // remembered goal cells when the stances collide there.
            std::vector<Coord> anchors{va.frame_pos};
            std::vector<Coord> near_goals = goals;
            std::sort(near_goals.begin(), near_goals.end(), [&](const Coord& x, const Coord& y) {
              int dx = manhattan(x, va.frame_pos), dy = manhattan(y, va.frame_pos);
              if (dx != dy) return dx < dy;
              return x < y;
            });
            for (size_t gi = 0; gi < near_goals.size() && gi < 6; ++gi)
              anchors.push_back(near_goals[gi]);

            for (const Coord& wa : anchors) {
              Coord wb = wa + (eb.translate - ea.translate);
              if (wa == wb) continue;
              std::set<Coord> cells_a{wa};
              for (const auto& [off, t2] : va.body.carried) {
                (void)t2;
                cells_a.insert(wa + rotate_cw(off, ea.rot));
              }
              bool clash = cells_a.count(wb) > 0;
              std::set<Coord> cells_b{wb};
              for (const auto& [off, t2] : vb.body.carried) {
                (void)t2;
                Coord c = wb + rotate_cw(off, eb.rot);
                if (cells_a.count(c)) clash = true;
                cells_b.insert(c);
              }
              if (clash) continue;
              std::set<Coord> ignore;
              ignore.insert(cells_a.begin(), cells_a.end());
              ignore.insert(cells_b.begin(), cells_b.end());
              for (const Coord& c : footprint_cells(va)) ignore.insert(c);
              for (const Coord& c : footprint_cells(vb)) ignore.insert(c);
              bool area_ok = true;
              for (const Coord& c : cells_a)
                if (!stance_area_clear(map, c, now, ignore)) area_ok = false;
              for (const Coord& c : cells_b)
                if (!stance_area_clear(map, c, now, ignore)) area_ok = false;
              if (!area_ok) continue;

              // First adjacent pair of placed entries names the connect.
              Coord ca{}, cb2{};
              bool found_pair = false;
              for (const auto& pa : ea.placed) {
                for (const auto& pb : eb.placed) {
                  if (manhattan(pa.pos, pb.pos) == 1) {
                    ca = pa.pos;
                    cb2 = pb.pos;
                    found_pair = true;
                    break;
                  }
                }
                if (found_pair) break;
              }
              if (!found_pair) continue;

              PendingCandidate pc;
              pc.c.task_name = task.name;
              pc.c.agent_a = va.body.id;
              pc.c.agent_b = vb.body.id;
              pc.c.stance_a = wa;
              pc.c.stance_b = wb;
              pc.c.orient_a = ea.rot;
              pc.c.orient_b = eb.rot;
              pc.c.named_a = ca - ea.translate;
              pc.c.named_b = cb2 - eb.translate;
              pc.c.placed_a = ea.placed;
              pc.c.placed_b = eb.placed;
              pc.c.structure_size = size;
              pc.va = &va;
              pc.vb = &vb;
              pc.shared_ignore = ignore;
              pc.estimate = task.reward - std::max(manhattan(va.frame_pos, wa) + (ea.rot ? 1 : 0),
                                                   manhattan(vb.frame_pos, wb) + (eb.rot ? 1 : 0));
              pc.c.metric = pc.estimate;
              per_task.push_back(std::move(pc));
              break;  // keep the first workable anchor for this placement pair
            }
          }
        }
      }
    }
    std::sort(per_task.begin(), per_task.end(),
              [](const PendingCandidate& x, const PendingCandidate& y) {
                return candidate_better(x.c, y.c);
              });
    if (static_cast<int>(per_task.size()) > cfg.candidate_cap)
      per_task.resize(static_cast<size_t>(cfg.candidate_cap));
    for (auto& pc : per_task) pending.push_back(std::move(pc));
  }

  // Step 5: exact metric = reward - max of the two path lengths.
  const std::map<std::string, int> reward_of = [&] {
    std::map<std::string, int> m;
    for (const Task& t : ordered_tasks) m[t.name] = t.reward;
    return m;
  }();
  std::vector<std::pair<CandidateStructure, std::pair<std::vector<Action>, std::vector<Action>>>>
      scored;
  for (PendingCandidate& pc : pending) {
    if (!budget.spend()) break;
    auto route = [&](const GroupAgentView& v, const Coord& stance, int orient) {
      PathQuery q;
      q.start = v.frame_pos;
      q.footprint = footprint_of(v.body);
      q.goal_cells = {stance};
      q.is_goal = [&](const Coord& c, int o) { return c == stance && o == orient; };
      q.ignore_cells = pc.shared_ignore;
      for (const Coord& c : own_cells_set(v)) q.ignore_cells.insert(c);
      q.max_iterations = cfg.max_iterations;
      q.now = now;
      return a_star(map, q);
    };
    PathResult pa = route(*pc.va, pc.c.stance_a, pc.c.orient_a);
    budget.spend(static_cast<std::uint64_t>(pa.iterations));
    if (!pa.found()) continue;
    PathResult pb = route(*pc.vb, pc.c.stance_b, pc.c.orient_b);
    budget.spend(static_cast<std::uint64_t>(pb.iterations));
    if (!pb.found()) continue;
    pc.c.path_len_a = pa.length();
    pc.c.path_len_b = pb.length();
    pc.c.metric = reward_of.at(pc.c.task_name) - std::max(pa.length(), pb.length());
    scored.emplace_back(pc.c, std::make_pair(pa.actions, pb.actions));
  }
  std::sort(scored.begin(), scored.end(),
            [](const auto& x, const auto& y) { return candidate_better(x.first, y.first); });
  for (const auto& [cand, paths] : scored) result.candidates.push_back(cand);

  // Step 6: greedy selection while both agents remain available.
  for (const auto& [cand, paths] : scored) {
    if (!ccs.count(cand.agent_a) || !ccs.count(cand.agent_b)) continue;
    result.chosen.push_back(cand);
    result.plans[cand.agent_a] = make_connect_plan(cand, true, paths.first, paths.second);
    result.plans[cand.agent_b] = make_connect_plan(cand, false, paths.second, paths.first);
    ccs.erase(cand.agent_a);
    ccs.erase(cand.agent_b);
  }
  return result;
}

std::map<AgentId, std::vector<OptionPlan>> compute_group_options(
    const GroupMap& map, const std::vector<GroupAgentView>& agents,
    const std::vector<Task>& tasks, const SimRules& rules, const ReasonerConfig& cfg,
    StepBudget& budget) {
  (void)rules;
  std::map<AgentId, std::vector<OptionPlan>> out;
  const int now = [&] {
    int best = 0;
    for (const auto& [_, c] : map.knowledge) best = std::max(best, c.last_seen);
    return best;
  }();

  bool any_hoarded = false;
  for (const GroupAgentView& v : agents)
    if (!v.body.carried.empty()) any_hoarded = true;
  bool goals_known = !known_cells_of(map, TerrainBelief::Goal).empty();

  std::set<AgentId> excluded;  // agents holding a priority plan already

  // AssembleTasks first; skipped entirely with nothing hoarded or no goals.
  if (any_hoarded && goals_known && !tasks.empty()) {
    AssembleResult assembled = assemble_tasks(map, agents, tasks, cfg, budget);
    for (auto& [id, plan] : assembled.plans) {
      out[id].push_back(std::move(plan));
      excluded.insert(id);
    }
  }

  // Cells of member bodies; hoard must not chase blocks carried by teammates.
  std::set<Coord> member_cells;
  for (const GroupAgentView& v : agents) {
    for (const Coord& c : footprint_cells(v)) member_cells.insert(c);
  }

  // Hoard: nearest interesting loose block or dispenser, fetch and attach.
  for (const GroupAgentView& v : agents) {
    if (budget.exhausted()) return out;
    if (excluded.count(v.body.id)) continue;
    if (static_cast<int>(v.body.carried.size()) >= cfg.max_hoard) continue;

    struct HoardTarget {
      Coord pos;
      bool is_block = false;
    };
    std::vector<HoardTarget> targets;
    for (const auto& [pos, cell] : map.knowledge) {
      bool fresh_block = cell.block && now - cell.block_seen <= map.stale_ttl;
      if (fresh_block) {
        if (!cfg.interesting(*cell.block)) continue;
        if (member_cells.count(pos)) continue;
        bool foe_nearby = false;
        for (const Coord& d : neighbor_offsets()) {
          auto it = map.knowledge.find(pos + d);
          if (it != map.knowledge.end() && it->second.foe_seen >= 0 &&
              now - it->second.foe_seen <= map.stale_ttl)
            foe_nearby = true;
        }
        if (foe_nearby) continue;
        targets.push_back({pos, true});
      } else if (cell.terrain == TerrainBelief::Dispenser && cfg.interesting(cell.dispenser_type)) {
        targets.push_back({pos, false});
      }
    }
    std::sort(targets.begin(), targets.end(), [&](const HoardTarget& a, const HoardTarget& b) {
      int da = manhattan(a.pos, v.frame_pos), db = manhattan(b.pos, v.frame_pos);
      if (da != db) return da < db;
      return a.pos < b.pos;
    });

    int attempts = 0;
    for (const HoardTarget& t : targets) {
      if (attempts++ >= 4) break;
      if (!budget.spend()) return out;
      std::vector<Coord> adj;
      for (const Coord& d : neighbor_offsets()) adj.push_back(t.pos + d);
      PathQuery q;
      q.start = v.frame_pos;
      q.footprint = footprint_of(v.body);
      q.goal_cells = adj;
      q.ignore_cells = own_cells_set(v);
      q.max_iterations = cfg.max_iterations;
      q.now = now;
      PathResult path = a_star(map, q);
      budget.spend(static_cast<std::uint64_t>(path.iterations));
      if (!path.found()) continue;
      auto [end, orient] = replay_end(v.frame_pos, path.actions);
      (void)orient;
      Dir d;
      if (!dir_from_offset(t.pos - end, d)) continue;
      OptionPlan plan;
      plan.kind = PlanKind::Hoard;
      plan.actions = path.actions;
      if (!t.is_block) plan.actions.push_back(Action::request(d));
      plan.actions.push_back(Action::attach(d));
      plan.target = t.pos;
      out[v.body.id].push_back(std::move(plan));
      excluded.insert(v.body.id);
      break;
    }
  }

  // Explore: frontier targets for everyone still unassigned.
  std::vector<const GroupAgentView*> roamers;
  for (const GroupAgentView& v : agents) {
    if (!excluded.count(v.body.id)) roamers.push_back(&v);
  }
  if (!roamers.empty()) {
    std::vector<Coord> targets = frontier_targets(map, static_cast<int>(roamers.size()));
    std::set<size_t> taken;
    for (const GroupAgentView* v : roamers) {
      if (budget.exhausted()) return out;
      // Nearest unassigned sector target.
      int best = -1;
      int best_d = 0;
      for (size_t i = 0; i < targets.size(); ++i) {
        if (taken.count(i)) continue;
        int d = manhattan(targets[i], v->frame_pos);
        if (best < 0 || d < best_d || (d == best_d && targets[i] < targets[best])) {
          best = static_cast<int>(i);
          best_d = d;
        }
      }
      if (best < 0) break;
      taken.insert(static_cast<size_t>(best));
      if (!budget.spend()) return out;
      PathQuery q;
      q.start = v->frame_pos;
      q.footprint = footprint_of(v->body);
      q.goal_cells = {targets[static_cast<size_t>(best)]};
      q.ignore_cells = own_cells_set(*v);
      q.max_iterations = cfg.max_iterations;
      q.now = now;
      PathResult path = a_star(map, q);
      budget.spend(static_cast<std::uint64_t>(path.iterations));
      if (!path.found() || path.actions.empty()) continue;
      OptionPlan plan;
      plan.kind = PlanKind::Roam;
      plan.actions = path.actions;
      plan.target = targets[static_cast<size_t>(best)];
      out[v->body.id].push_back(std::move(plan));
    }
  }
  return out;
}

std::vector<const OptionPlan*> plan_priority_order(const std::vector<OptionPlan>& plans,
                                                   bool connected_to_agent, int short_len) {
  auto tier = [&](const OptionPlan& p) -> int {
    switch (p.kind) {
      case PlanKind::GoSubmit:
        if (!p.actions.empty() && p.actions.front().kind == ActionKind::Submit) return 1;
        return p.length() < short_len ? 3 : 5;
      case PlanKind::Split:
        return connected_to_agent ? 2 : 99;
      case PlanKind::Dodge: return 4;
      case PlanKind::GoConnect: return 6;
      case PlanKind::Hoard: return 7;
      case PlanKind::Roam: return 8;
      case PlanKind::GoNearSubmit: return 9;
      case PlanKind::Dig: return 10;
    }
    return 99;
  };
  std::vector<std::pair<std::pair<int, int>, const OptionPlan*>> ranked;
  for (const OptionPlan& p : plans) {
    int t = tier(p);
    if (t >= 99) continue;
    ranked.push_back({{t, p.length()}, &p});
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<const OptionPlan*> out;
  for (const auto& [_, p] : ranked) out.push_back(p);
  return out;
}

const OptionPlan* select_plan(const std::vector<OptionPlan>& plans, bool connected_to_agent,
                              int short_len) {
  auto ordered = plan_priority_order(plans, connected_to_agent, short_len);
  return ordered.empty() ? nullptr : ordered.front();
}

Action act_step(const std::vector<const OptionPlan*>& ordered, ReservationMap& res, AgentId agent,
                const std::vector<Coord>& current_cells, const OptionPlan** chosen,
                std::vector<std::pair<PlanKind, bool>>* trace) {
  if (chosen) *chosen = nullptr;
  for (const OptionPlan* plan : ordered) {
    if (plan->actions.empty()) continue;
    const Action& first = plan->actions.front();
    // Detach, submit and skip move nothing; every member's stay-put cells are
    // already claimed at step start.
    bool stationary = first.kind == ActionKind::Detach || first.kind == ActionKind::Submit ||
                      first.kind == ActionKind::Skip;
    ReserveOutcome r =
        reserve_action(res, agent, first, stationary ? std::vector<Coord>{} : current_cells);
    if (trace) trace->push_back({plan->kind, r.approved});
    if (r.approved) {
      if (chosen) *chosen = plan;
      return first;
    }
  }
  return Action::skip();
}

namespace {

class FitBut final : public TeamEngine {
 public:
  FitBut(const TeamContext& ctx, const ReasonerConfig& cfg)
      : ctx_(ctx), cfg_(cfg), reg_(SyncRegistry::singletons(ctx.agents)) {}

  const SyncRegistry* registry() const override { return &reg_; }

  std::map<AgentId, Action> step(const std::map<AgentId, Percept>& percepts, StepBudget& budget,
                                 EventSink& sink) override {
    // Feedback from the previous step: confirmed moves, attachment bookkeeping.
    for (AgentId id : ctx_.agents) {
      auto pit = percepts.find(id);
      if (pit == percepts.end()) continue;
      Sticky& st = sticky_[id];
      if (!st.last_action) continue;
      const ActionResult& res = pit->second.last_action_result;
      track_own_action(reg_.group_of(id), id, *st.last_action, res);
      if (st.last_action->kind == ActionKind::Move && res.outcome == ActionOutcome::Failed &&
          res.reason == FailReason::PathBlocked) {
        mark_blocked_move(reg_.group_of(id), id, st.last_action->dir, pit->second);
      }
      if (st.last_action->kind == ActionKind::Rotate && res.outcome == ActionOutcome::Failed &&
          res.reason == FailReason::PathBlocked) {
        // Swept cells hit something the map cannot see (often an agent);
        // stamp them so the next plans route around for a while.
        GroupMap& gmap = reg_.group_of(id);
        auto member = gmap.members.find(id);
        if (member != gmap.members.end()) {
          const BodyState body = derive_body(pit->second);
          for (const auto& [off, type] : body.carried) {
            (void)type;
            gmap.move_failed[member->second + rotate(off, st.last_action->rot)] =
                pit->second.step;
          }
        }
      }
      if (res.outcome == ActionOutcome::Success) {
        switch (st.last_action->kind) {
          case ActionKind::Attach:
            st.own_block_dir = st.last_action->dir;
            break;
          case ActionKind::Detach:
            st.own_block_dir.reset();
            st.split_duty = false;
            break;
          case ActionKind::Rotate:
            if (st.own_block_dir) {
              Coord o = rotate(offset(*st.own_block_dir), st.last_action->rot);
              Dir d;
              if (dir_from_offset(o, d)) st.own_block_dir = d;
            }
            break;
          case ActionKind::Connect:
            if (st.giver_on_connect) st.split_duty = true;
            break;
          case ActionKind::Submit:
            st.own_block_dir.reset();
            break;
          default:
            break;
        }
      }
      st.giver_on_connect = false;
    }

    // Mutual-sighting synchronization, then percepts into the merged maps.
    for (const MergeRecord& rec : sync_step(reg_, percepts)) {
      if (sink.verbosity() >= 1) {
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
    }
    for (AgentId id : ctx_.agents) {
      auto pit = percepts.find(id);
      if (pit != percepts.end()) integrate_percept(reg_.group_of(id), id, pit->second);
    }

    std::map<AgentId, Action> actions;
    for (auto& [gid, gmap] : reg_.groups) {
      (void)gid;
      step_group(gmap, percepts, budget, sink, actions);
    }
    for (AgentId id : ctx_.agents) {
      if (!actions.count(id)) actions[id] = Action::skip();
      sticky_[id].last_action = actions[id];
    }
    return actions;
  }

 private:
  struct Sticky {
    std::optional<Action> last_action;
    std::optional<Dir> own_block_dir;
    bool giver_on_connect = false;
    bool split_duty = false;
  };

  void step_group(GroupMap& gmap, const std::map<AgentId, Percept>& percepts, StepBudget& budget,
                  EventSink& sink, std::map<AgentId, Action>& actions) {
    std::vector<AgentId> members;
    for (const auto& [id, _] : gmap.members) members.push_back(id);

    std::map<AgentId, GroupAgentView> views;
    std::vector<Task> tasks;
    for (AgentId id : members) {
      auto pit = percepts.find(id);
      if (pit == percepts.end()) continue;
      GroupAgentView v;
      v.body = derive_body(pit->second);
      v.frame_pos = gmap.members.at(id);
      views.emplace(id, std::move(v));
      if (tasks.empty()) tasks = pit->second.tasks;
    }

    // While two agents share a structure, the giver splits and the keeper
    // holds still; anything else drags somebody.
    std::map<AgentId, std::vector<OptionPlan>> plans;
    std::vector<GroupAgentView> free_views;
    for (AgentId id : members) {
      auto vit = views.find(id);
      if (vit == views.end()) continue;
      const GroupAgentView& v = vit->second;
      if (v.body.connected_to_agent) {
        Sticky& st = sticky_[id];
        if (st.split_duty && st.own_block_dir) {
          OptionPlan split;
          split.kind = PlanKind::Split;
          split.actions.push_back(Action::detach(*st.own_block_dir));
          plans[id].push_back(std::move(split));
        }
        continue;
      }
      plans[id] = compute_local_options(gmap, v, percepts.at(id), ctx_.rules, cfg_);
      free_views.push_back(v);
    }

    if (sink.verbosity() >= 3) {
      int holders = 0;
      for (const auto& v : free_views)
        if (!v.body.carried.empty()) ++holders;
      int goals = 0;
      for (const auto& [pos, cell] : gmap.knowledge) {
        (void)pos;
        if (cell.terrain == TerrainBelief::Goal) ++goals;
      }
      sink.emit(TraceEvent{"group_phase", {}}
                    .with("team", ctx_.team)
                    .with("group", gmap.group_id)
                    .with("members", static_cast<int>(members.size()))
                    .with("holders", holders)
                    .with("goals_known", goals)
                    .with("tasks", static_cast<int>(tasks.size())));
    }

    auto group_plans = compute_group_options(gmap, free_views, tasks, ctx_.rules, cfg_, budget);
    for (auto& [id, list] : group_plans) {
      for (auto& p : list) plans[id].push_back(std::move(p));
    }

    ReservationMap res;
    reset_reservations(res, percepts.empty() ? 0 : percepts.begin()->second.step);
    for (AgentId id : members) {
      auto vit = views.find(id);
      if (vit != views.end()) claim_footprint(res, id, footprint_cells(vit->second));
    }

    // Proposal order: best-plan priority first, ties by id.
    std::vector<std::pair<int, AgentId>> order;
    std::map<AgentId, std::vector<const OptionPlan*>> ordered_plans;
    for (AgentId id : members) {
      auto vit = views.find(id);
      if (vit == views.end()) continue;
      bool connected = vit->second.body.connected_to_agent;
      auto ordered = plan_priority_order(plans[id], connected, cfg_.go_submit_short_len);
      int best = ordered.empty() ? 98 : tier_of(*ordered.front(), cfg_.go_submit_short_len);
      ordered_plans[id] = std::move(ordered);
      order.push_back({best, id});
    }
    std::sort(order.begin(), order.end());

    for (const auto& [tier, id] : order) {
      (void)tier;
      auto vit = views.find(id);
      if (vit == views.end()) continue;
      const OptionPlan* chosen = nullptr;
      std::vector<std::pair<PlanKind, bool>> trace;
      Action act = act_step(ordered_plans[id], res, id, footprint_cells(vit->second), &chosen,
                            sink.verbosity() >= 2 ? &trace : nullptr);
      actions[id] = act;
      if (chosen && chosen->kind == PlanKind::GoConnect && act.kind == ActionKind::Connect &&
          chosen->split_after) {
        sticky_[id].giver_on_connect = true;
      }
      if (sink.verbosity() >= 2) {
        for (const auto& [kind, approved] : trace) {
          sink.emit(TraceEvent{"reservation", {}}
                        .with("team", ctx_.team)
                        .with("agent", id)
                        .with("plan", std::string(plan_kind_str(kind)))
                        .with("approved", approved));
        }
      }
      if (sink.verbosity() >= 3 && chosen) {
        sink.emit(TraceEvent{"plan_selected", {}}
                      .with("team", ctx_.team)
                      .with("agent", id)
                      .with("plan", std::string(plan_kind_str(chosen->kind)))
                      .with("length", chosen->length()));
      }
    }
  }

  static int tier_of(const OptionPlan& p, int short_len) {
    switch (p.kind) {
      case PlanKind::GoSubmit:
        if (!p.actions.empty() && p.actions.front().kind == ActionKind::Submit) return 1;
        return p.length() < short_len ? 3 : 5;
      case PlanKind::Split: return 2;
      case PlanKind::Dodge: return 4;
      case PlanKind::GoConnect: return 6;
      case PlanKind::Hoard: return 7;
      case PlanKind::Roam: return 8;
      case PlanKind::GoNearSubmit: return 9;
      case PlanKind::Dig: return 10;
    }
    return 98;
  }

  TeamContext ctx_;
  ReasonerConfig cfg_;
  SyncRegistry reg_;
  std::map<AgentId, Sticky> sticky_;
};

}  // namespace

std::unique_ptr<TeamEngine> make_fitbut(const TeamContext& ctx, const ReasonerConfig& cfg) {
  return std::make_unique<FitBut>(ctx, cfg);
}

}  // namespace mapcsim
