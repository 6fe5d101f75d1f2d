#include "mapcsim/world.hpp"

#include <algorithm>
#include <cassert>
#include <deque>
#include <set>

namespace mapcsim {

namespace {

// FNV-1a, fed field by field so the digest is layout-independent.
struct Hasher {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  void bytes(const void* p, size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 0x100000001b3ULL;
    }
  }
  void u64(std::uint64_t v) { bytes(&v, sizeof v); }
  void i(int v) { u64(static_cast<std::uint64_t>(static_cast<std::int64_t>(v))); }
  void ll(long long v) { u64(static_cast<std::uint64_t>(v)); }
  void coord(const Coord& c) { i(c.x); i(c.y); }
  void str(const std::string& s) {
    u64(s.size());
    bytes(s.data(), s.size());
  }
};

std::map<EntKey, std::vector<EntKey>> adjacency(const WorldState& w) {
  std::map<EntKey, std::vector<EntKey>> adj;
  for (const auto& [a, b] : w.attachments) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  return adj;
}

void erase_block(WorldState& w, BlockId id) {
  auto it = w.blocks.find(id);
  if (it == w.blocks.end()) return;
  w.block_at.erase(it->second.pos);
  w.blocks.erase(it);
  for (auto e = w.attachments.begin(); e != w.attachments.end();) {
    if (e->first == EntKey::block(id) || e->second == EntKey::block(id)) {
      e = w.attachments.erase(e);
    } else {
      ++e;
    }
  }
}

// Destroys every block transitively attached to `agent` and drops the edges.
int strip_attached_blocks(WorldState& w, AgentId agent) {
  int destroyed = 0;
  for (EntKey k : component_of(w, EntKey::agent(agent))) {
    if (k.kind == EntKey::BlockEnt) {
      erase_block(w, k.id);
      ++destroyed;
    }
  }
  // Remaining edges incident to the agent (none should survive block erasure,
  // agents never attach directly to agents).
  for (auto e = w.attachments.begin(); e != w.attachments.end();) {
    if (e->first == EntKey::agent(agent) || e->second == EntKey::agent(agent)) {
      e = w.attachments.erase(e);
    } else {
      ++e;
    }
  }
  return destroyed;
}

BlockedBy classify_occupant(const WorldState& w, const Coord& c, const std::string& team) {
  if (const AgentEntity* a = w.agent_at(c)) {
    return a->team == team ? BlockedBy::Friend : BlockedBy::Foe;
  }
  if (const Block* b = w.block_at_pos(c)) {
    // A carried block counts as its carrier's team.
    for (EntKey k : component_of(w, EntKey::block(b->id))) {
      if (k.kind == EntKey::Agent) {
        return w.agents[k.id].team == team ? BlockedBy::Friend : BlockedBy::Foe;
      }
    }
    return BlockedBy::Block;
  }
  return BlockedBy::None;
}

ActionResult resolve_rotate(WorldState& w, AgentId agent, Rot rot, BlockedBy* blocked) {
  AgentEntity& ag = w.agents[agent];
  auto comp = component_of(w, EntKey::agent(agent));
  int agents_in_comp = 0;
  for (EntKey k : comp)
    if (k.kind == EntKey::Agent) ++agents_in_comp;
  if (agents_in_comp > 1) return ActionResult::failure(FailReason::MultiAgentRotation);

  std::set<Coord> own_cells;
  for (EntKey k : comp) own_cells.insert(entity_pos(w, k));

  std::vector<std::pair<BlockId, Coord>> moves;
  for (EntKey k : comp) {
    if (k.kind != EntKey::BlockEnt) continue;
    Coord rel = w.blocks[k.id].pos - ag.pos;
    Coord dest = ag.pos + rotate(rel, rot);
    if (!w.in_bounds(dest)) {
      if (blocked) *blocked = BlockedBy::Edge;
      return ActionResult::failure(FailReason::PathBlocked);
    }
    if (w.cell(dest).kind == CellKind::Obstacle) {
      if (blocked) *blocked = BlockedBy::Terrain;
      return ActionResult::failure(FailReason::PathBlocked);
    }
    if (!own_cells.count(dest)) {
      BlockedBy cause = classify_occupant(w, dest, ag.team);
      if (cause != BlockedBy::None) {
        if (blocked) *blocked = cause;
        return ActionResult::failure(FailReason::PathBlocked);
      }
    }
    moves.emplace_back(k.id, dest);
  }
  for (const auto& [id, dest] : moves) w.block_at.erase(w.blocks[id].pos);
  for (const auto& [id, dest] : moves) {
    w.blocks[id].pos = dest;
    w.block_at[dest] = id;
  }
  return ActionResult::success();
}

ActionResult resolve_attach(WorldState& w, AgentId agent, Dir dir) {
  AgentEntity& ag = w.agents[agent];
  Coord target = ag.pos + offset(dir);
  if (!w.in_bounds(target)) return ActionResult::failure(FailReason::InvalidTarget);
  const Block* b = w.block_at_pos(target);
  if (!b) return ActionResult::failure(FailReason::InvalidTarget);
  for (EntKey k : component_of(w, EntKey::block(b->id))) {
    if (k.kind == EntKey::Agent) {
      return k.id == agent ? ActionResult::failure(FailReason::InvalidTarget)
                           : ActionResult::failure(FailReason::OtherAgentAttached);
    }
  }
  add_attachment(w, EntKey::agent(agent), EntKey::block(b->id));
  return ActionResult::success();
}

ActionResult resolve_detach(WorldState& w, AgentId agent, Dir dir) {
  AgentEntity& ag = w.agents[agent];
  Coord target = ag.pos + offset(dir);
  const Block* b = w.block_at_pos(target);
  if (!b) return ActionResult::failure(FailReason::InvalidTarget);
  AttachEdge e = std::minmax(EntKey::agent(agent), EntKey::block(b->id));
  if (!w.attachments.count(e)) return ActionResult::failure(FailReason::InvalidTarget);
  w.attachments.erase(e);
  return ActionResult::success();
}

ActionResult resolve_request(WorldState& w, AgentId agent, Dir dir) {
  AgentEntity& ag = w.agents[agent];
  Coord target = ag.pos + offset(dir);
  if (!w.in_bounds(target)) return ActionResult::failure(FailReason::InvalidTarget);
  if (w.cell(target).kind != CellKind::Dispenser)
    return ActionResult::failure(FailReason::InvalidTarget);
  if (w.block_at_pos(target) || w.agent_at(target))
    return ActionResult::failure(FailReason::PathBlocked);
  add_block(w, target, w.cell(target).dispenser_type);
  return ActionResult::success();
}

// Validated pairwise connect; caller already matched the two actions.
ActionResult resolve_connect_pair(WorldState& w, AgentId a, const Action& act_a, AgentId b,
                                  const Action& act_b) {
  const AgentEntity& ea = w.agents[a];
  const AgentEntity& eb = w.agents[b];
  if (ea.team != eb.team) return ActionResult::failure(FailReason::InvalidPartner);
  if (!(act_a.own_block == act_b.partner_block) || !(act_b.own_block == act_a.partner_block))
    return ActionResult::failure(FailReason::InvalidPartner);

  Coord pa = ea.pos + act_a.own_block;
  Coord pb = eb.pos + act_b.own_block;
  const Block* ba = w.block_at_pos(pa);
  const Block* bb = w.block_at_pos(pb);
  if (!ba || !bb) return ActionResult::failure(FailReason::InvalidTarget);
  if (manhattan(pa, pb) != 1) return ActionResult::failure(FailReason::InvalidTarget);

  auto in_component = [&](EntKey needle, AgentId owner) {
    for (EntKey k : component_of(w, EntKey::agent(owner)))
      if (k == needle) return true;
    return false;
  };
  if (!in_component(EntKey::block(ba->id), a)) return ActionResult::failure(FailReason::InvalidTarget);
  if (!in_component(EntKey::block(bb->id), b)) return ActionResult::failure(FailReason::InvalidTarget);
  // Distinct structures only; a connect within one component is a no-op error.
  if (in_component(EntKey::agent(b), a)) return ActionResult::failure(FailReason::InvalidPartner);

  add_attachment(w, EntKey::block(ba->id), EntKey::block(bb->id));
  return ActionResult::success();
}

void detonate(WorldState& w, const ClearEvent& ev, WorldEvent& out) {
  int destroyed = 0;
  for (int dy = -ev.radius; dy <= ev.radius; ++dy) {
    for (int dx = -ev.radius; dx <= ev.radius; ++dx) {
      if (std::abs(dx) + std::abs(dy) > ev.radius) continue;
      Coord c = ev.center + Coord{dx, dy};
      if (!w.in_bounds(c)) continue;
      if (w.cell(c).kind == CellKind::Obstacle) w.cell(c).kind = CellKind::Free;
      if (const Block* b = w.block_at_pos(c)) {
        erase_block(w, b->id);
        ++destroyed;
      }
    }
  }
  // Agents caught inside lose their whole attached structure.
  for (const AgentEntity& ag : w.agents) {
    if (manhattan(ag.pos, ev.center) <= ev.radius) {
      destroyed += strip_attached_blocks(w, ag.id);
    }
  }
  if (w.obstacle_regrowth) {
    for (int dy = -ev.radius - 1; dy <= ev.radius + 1; ++dy) {
      for (int dx = -ev.radius - 1; dx <= ev.radius + 1; ++dx) {
        if (std::abs(dx) + std::abs(dy) != ev.radius + 1) continue;
        Coord c = ev.center + Coord{dx, dy};
        if (w.in_bounds(c) && w.cell(c).kind == CellKind::Free && !w.block_at_pos(c) &&
            !w.agent_at(c)) {
          w.cell(c).kind = CellKind::Obstacle;
        }
      }
    }
  }
  out.blocks_destroyed = destroyed;
}

}  // namespace

const char* outcome_str(ActionOutcome o) {
  switch (o) {
    case ActionOutcome::Success: return "success";
    case ActionOutcome::Charging: return "charging";
    case ActionOutcome::Failed: return "failure";
  }
  return "?";
}

const char* fail_reason_str(FailReason r) {
  switch (r) {
    case FailReason::None: return "none";
    case FailReason::PathBlocked: return "path_blocked";
    case FailReason::MultiAgentRotation: return "multi_agent_rotation";
    case FailReason::NotOnGoal: return "not_on_goal";
    case FailReason::WrongStructure: return "wrong_structure";
    case FailReason::DeadlinePassed: return "deadline_passed";
    case FailReason::OtherAgentAttached: return "other_agent_attached";
    case FailReason::InsufficientEnergy: return "insufficient_energy";
    case FailReason::InvalidTarget: return "invalid_target";
    case FailReason::InvalidPartner: return "invalid_partner";
  }
  return "?";
}

const char* blocked_by_str(BlockedBy b) {
  switch (b) {
    case BlockedBy::None: return "none";
    case BlockedBy::Edge: return "edge";
    case BlockedBy::Terrain: return "terrain";
    case BlockedBy::Block: return "block";
    case BlockedBy::Friend: return "friend";
    case BlockedBy::Foe: return "foe";
  }
  return "?";
}

const char* thing_kind_str(ThingKind k) {
  switch (k) {
    case ThingKind::FriendEntity: return "friend";
    case ThingKind::FoeEntity: return "foe";
    case ThingKind::Block: return "block";
    case ThingKind::Dispenser: return "dispenser";
    case ThingKind::Obstacle: return "obstacle";
    case ThingKind::Goal: return "goal";
    case ThingKind::ClearMarker: return "clear_marker";
  }
  return "?";
}

bool TaskShape::valid() const {
  if (entries.empty()) return false;
  std::set<Coord> cells;
  for (const auto& e : entries) {
    if (e.pos == Coord{0, 0}) return false;
    if (!cells.insert(e.pos).second) return false;
  }
  // Connectivity together with the origin.
  std::set<Coord> all = cells;
  all.insert({0, 0});
  std::set<Coord> seen;
  std::deque<Coord> queue{{0, 0}};
  seen.insert({0, 0});
  while (!queue.empty()) {
    Coord c = queue.front();
    queue.pop_front();
    for (const Coord& d : neighbor_offsets()) {
      Coord n = c + d;
      if (all.count(n) && !seen.count(n)) {
        seen.insert(n);
        queue.push_back(n);
      }
    }
  }
  return seen.size() == all.size();
}

const AgentEntity* WorldState::agent_at(const Coord& c) const {
  for (const auto& a : agents)
    if (a.pos == c) return &a;
  return nullptr;
}

const Block* WorldState::block_at_pos(const Coord& c) const {
  auto it = block_at.find(c);
  if (it == block_at.end()) return nullptr;
  return &blocks.at(it->second);
}

const Task* WorldState::find_task(const std::string& name) const {
  for (const auto& t : tasks)
    if (t.name == name) return &t;
  return nullptr;
}

std::vector<EntKey> component_of(const WorldState& world, EntKey start) {
  auto adj = adjacency(world);
  std::vector<EntKey> out;
  std::set<EntKey> seen{start};
  std::deque<EntKey> queue{start};
  while (!queue.empty()) {
    EntKey k = queue.front();
    queue.pop_front();
    out.push_back(k);
    auto it = adj.find(k);
    if (it == adj.end()) continue;
    for (EntKey n : it->second) {
      if (seen.insert(n).second) queue.push_back(n);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::pair<Coord, BlockType>> carried_blocks(const WorldState& world, AgentId agent) {
  std::vector<std::pair<Coord, BlockType>> out;
  Coord base = world.agents[agent].pos;
  for (EntKey k : component_of(world, EntKey::agent(agent))) {
    if (k.kind == EntKey::BlockEnt) {
      const Block& b = world.blocks.at(k.id);
      out.emplace_back(b.pos - base, b.type);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

int component_agent_count(const WorldState& world, AgentId agent) {
  int n = 0;
  for (EntKey k : component_of(world, EntKey::agent(agent)))
    if (k.kind == EntKey::Agent) ++n;
  return n;
}

int direct_block_count(const WorldState& world, AgentId agent) {
  int n = 0;
  for (const auto& [a, b] : world.attachments) {
    if (a == EntKey::agent(agent) && b.kind == EntKey::BlockEnt) ++n;
    if (b == EntKey::agent(agent) && a.kind == EntKey::BlockEnt) ++n;
  }
  return n;
}

Coord entity_pos(const WorldState& world, EntKey k) {
  return k.kind == EntKey::Agent ? world.agents[k.id].pos : world.blocks.at(k.id).pos;
}

ActionResult move_component(WorldState& world, AgentId agent, Dir dir, BlockedBy* blocked) {
  Coord delta = offset(dir);
  auto comp = component_of(world, EntKey::agent(agent));
  std::set<Coord> own_cells;
  for (EntKey k : comp) own_cells.insert(entity_pos(world, k));

  for (EntKey k : comp) {
    Coord dest = entity_pos(world, k) + delta;
    if (!world.in_bounds(dest)) {
      if (blocked) *blocked = BlockedBy::Edge;
      return ActionResult::failure(FailReason::PathBlocked);
    }
    if (world.cell(dest).kind == CellKind::Obstacle) {
      if (blocked) *blocked = BlockedBy::Terrain;
      return ActionResult::failure(FailReason::PathBlocked);
    }
    if (own_cells.count(dest)) continue;
    BlockedBy cause = classify_occupant(world, dest, world.agents[agent].team);
    if (cause != BlockedBy::None) {
      if (blocked) *blocked = cause;
      return ActionResult::failure(FailReason::PathBlocked);
    }
  }

  for (EntKey k : comp) {
    if (k.kind == EntKey::BlockEnt) world.block_at.erase(world.blocks[k.id].pos);
  }
  for (EntKey k : comp) {
    if (k.kind == EntKey::Agent) {
      world.agents[k.id].pos += delta;
    } else {
      world.blocks[k.id].pos += delta;
      world.block_at[world.blocks[k.id].pos] = k.id;
    }
  }
  return ActionResult::success();
}

ActionResult resolve_submit(WorldState& world, AgentId agent, const std::string& task_name) {
  AgentEntity& ag = world.agents[agent];
  const Task* task = world.find_task(task_name);
  if (!task) return ActionResult::failure(FailReason::InvalidTarget);
  if (world.step > task->deadline) return ActionResult::failure(FailReason::DeadlinePassed);
  if (world.cell(ag.pos).kind != CellKind::Goal)
    return ActionResult::failure(FailReason::NotOnGoal);
  if (component_agent_count(world, agent) > 1)
    return ActionResult::failure(FailReason::OtherAgentAttached);

  auto carried = carried_blocks(world, agent);
  std::vector<TaskShapeEntry> have;
  have.reserve(carried.size());
  for (const auto& [pos, type] : carried) have.push_back({pos, type});
  std::sort(have.begin(), have.end());
  if (have != task->shape.entries) return ActionResult::failure(FailReason::WrongStructure);

  for (EntKey k : component_of(world, EntKey::agent(agent))) {
    if (k.kind == EntKey::BlockEnt) erase_block(world, k.id);
  }
  world.scores[ag.team] += task->reward;
  return ActionResult::success();
}

ActionResult resolve_clear(WorldState& world, AgentId agent, const Coord& rel) {
  AgentEntity& ag = world.agents[agent];
  if (manhattan(rel) > world.rules.clear_range) {
    ag.charge.reset();
    return ActionResult::failure(FailReason::InvalidTarget);
  }
  Coord target = ag.pos + rel;
  if (!world.in_bounds(target)) {
    ag.charge.reset();
    return ActionResult::failure(FailReason::InvalidTarget);
  }
  if (ag.energy < world.rules.clear_cost) {
    ag.charge.reset();
    return ActionResult::failure(FailReason::InsufficientEnergy);
  }

  int steps = 1;
  if (ag.charge && ag.charge->first == target) steps = ag.charge->second + 1;
  if (steps < world.rules.clear_charge_steps) {
    ag.charge = {target, steps};
    return ActionResult::charging();
  }

  ag.charge.reset();
  ag.energy -= world.rules.clear_cost;
  if (world.cell(target).kind == CellKind::Obstacle) world.cell(target).kind = CellKind::Free;
  if (const Block* b = world.block_at_pos(target)) erase_block(world, b->id);
  if (const AgentEntity* victim = world.agent_at(target)) {
    strip_attached_blocks(world, victim->id);
  }
  return ActionResult::success();
}

StepOutcome step_world(WorldState& world, const std::map<AgentId, Action>& actions) {
  StepOutcome out;
  const int s = world.step;
  const int n = static_cast<int>(world.agents.size());

  std::vector<ActionResult> results(n, ActionResult::success());
  std::vector<BlockedBy> causes(n, BlockedBy::None);
  std::vector<bool> handled(n, false);

  auto action_for = [&](AgentId id) {
    auto it = actions.find(id);
    return it != actions.end() ? it->second : Action::skip();
  };

  for (AgentId id = 0; id < n; ++id) {
    if (handled[id]) continue;
    handled[id] = true;
    Action act = action_for(id);
    AgentEntity& ag = world.agents[id];

    if (act.kind != ActionKind::Clear) ag.charge.reset();

    switch (act.kind) {
      case ActionKind::Move:
        results[id] = move_component(world, id, act.dir, &causes[id]);
        break;
      case ActionKind::Rotate:
        results[id] = resolve_rotate(world, id, act.rot, &causes[id]);
        break;
      case ActionKind::Attach:
        results[id] = resolve_attach(world, id, act.dir);
        break;
      case ActionKind::Detach:
        results[id] = resolve_detach(world, id, act.dir);
        break;
      case ActionKind::Request:
        results[id] = resolve_request(world, id, act.dir);
        break;
      case ActionKind::Clear:
        results[id] = resolve_clear(world, id, act.target);
        break;
      case ActionKind::Submit:
        results[id] = resolve_submit(world, id, act.task_name);
        break;
      case ActionKind::Skip:
        results[id] = ActionResult::success();
        break;
      case ActionKind::Connect: {
        AgentId p = act.partner;
        if (p < 0 || p >= n || p == id) {
          results[id] = ActionResult::failure(FailReason::InvalidPartner);
          break;
        }
        Action pact = action_for(p);
        bool mutual = pact.kind == ActionKind::Connect && pact.partner == id;
        if (!mutual) {
          results[id] = ActionResult::failure(FailReason::InvalidPartner);
          break;
        }
        // Resolve the pair at the lower id's turn; both get the same result.
        ActionResult r = resolve_connect_pair(world, id, act, p, pact);
        results[id] = r;
        if (p > id) {
          world.agents[p].charge.reset();
          results[p] = r;
          handled[p] = true;
        }
        break;
      }
    }
  }

  for (AgentId id = 0; id < n; ++id) {
    world.agents[id].last_action_result = results[id];
    WorldEvent ev{};
    ev.kind = WorldEvent::Kind::ActionResolved;
    ev.step = s;
    ev.agent = id;
    ev.action = action_for(id);
    ev.result = results[id];
    ev.blocked_by = causes[id];
    out.events.push_back(ev);
    if (ev.action.kind == ActionKind::Submit && results[id].outcome == ActionOutcome::Success) {
      WorldEvent sub{};
      sub.kind = WorldEvent::Kind::Submitted;
      sub.step = s;
      sub.agent = id;
      if (const Task* t = world.find_task(ev.action.task_name)) sub.task = *t;
      sub.new_score = world.scores[world.agents[id].team];
      out.events.push_back(sub);
    }
  }

  // Due detonations.
  for (auto it = world.clear_events.begin(); it != world.clear_events.end();) {
    if (it->detonation_step <= s) {
      WorldEvent ev{};
      ev.kind = WorldEvent::Kind::Detonated;
      ev.step = s;
      ev.clear = *it;
      detonate(world, *it, ev);
      out.events.push_back(ev);
      it = world.clear_events.erase(it);
    } else {
      ++it;
    }
  }

  // Task expiry at the end of the step they dead-line on.
  for (auto it = world.tasks.begin(); it != world.tasks.end();) {
    if (it->deadline <= s) {
      WorldEvent ev{};
      ev.kind = WorldEvent::Kind::TaskExpired;
      ev.step = s;
      ev.task = *it;
      out.events.push_back(ev);
      it = world.tasks.erase(it);
    } else {
      ++it;
    }
  }

  // Spawn tasks and clear events from the world's own stream.
  if (world.gen.task_spawn_period > 0 && s % world.gen.task_spawn_period == 0 &&
      static_cast<int>(world.tasks.size()) < world.gen.max_active_tasks &&
      !world.gen.block_types.empty() && !world.gen.shape_sizes.empty()) {
    int size = world.gen.shape_sizes[world.rng.bounded(
        static_cast<std::uint32_t>(world.gen.shape_sizes.size()))];
    Task t;
    t.name = "task" + std::to_string(world.gen.task_counter++);
    if (world.gen.recurring) {
      auto it = world.gen.recurring_shapes.find(size);
      if (it == world.gen.recurring_shapes.end()) {
        it = world.gen.recurring_shapes
                 .emplace(size, random_shape(world.rng, size, world.gen.block_types,
                                             world.gen.entries_connected))
                 .first;
      }
      t.shape = it->second;
    } else {
      t.shape = random_shape(world.rng, size, world.gen.block_types,
                             world.gen.entries_connected);
    }
    t.reward = world.gen.reward_per_block * static_cast<int>(t.shape.entries.size());
    t.deadline = s + world.gen.deadline_horizon;
    world.tasks.push_back(t);
    WorldEvent ev{};
    ev.kind = WorldEvent::Kind::TaskSpawned;
    ev.step = s;
    ev.task = t;
    out.events.push_back(ev);
  }
  if (world.gen.clear_event_rate > 0 && world.rng.chance(world.gen.clear_event_rate)) {
    ClearEvent ev;
    ev.center = {static_cast<int>(world.rng.bounded(world.width)),
                 static_cast<int>(world.rng.bounded(world.height))};
    ev.radius = world.rules.clear_event_radius;
    ev.detonation_step = s + 1 + world.rules.warn_steps;
    world.clear_events.push_back(ev);
    WorldEvent we{};
    we.kind = WorldEvent::Kind::ClearSpawned;
    we.step = s;
    we.clear = ev;
    out.events.push_back(we);
  }

  for (auto& ag : world.agents) {
    ag.energy = std::min(world.rules.max_energy, ag.energy + world.rules.energy_recharge);
  }

  world.step = s + 1;
  for (const auto& ag : world.agents) {
    out.percepts.emplace(ag.id, gen_percept(world, ag.id));
  }
  return out;
}

Percept gen_percept(const WorldState& world, AgentId agent) {
  const AgentEntity& self = world.agents[agent];
  const int r = world.rules.vision_radius;
  Percept p;
  p.step = world.step;
  p.self = agent;
  p.team = self.team;
  p.energy = self.energy;
  p.last_action_result = self.last_action_result;
  p.vision_radius = r;
  auto sc = world.scores.find(self.team);
  p.team_score = sc == world.scores.end() ? 0 : sc->second;

  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      if (std::abs(dx) + std::abs(dy) > r) continue;
      Coord rel{dx, dy};
      Coord c = self.pos + rel;
      if (!world.in_bounds(c)) continue;
      const Cell& cell = world.cell(c);
      if (cell.kind == CellKind::Obstacle) p.things.push_back({rel, ThingKind::Obstacle, "", -1});
      if (cell.kind == CellKind::Dispenser)
        p.things.push_back({rel, ThingKind::Dispenser, cell.dispenser_type, -1});
      if (cell.kind == CellKind::Goal) p.things.push_back({rel, ThingKind::Goal, "", -1});
      if (const Block* b = world.block_at_pos(c))
        p.things.push_back({rel, ThingKind::Block, b->type, -1});
      if (const AgentEntity* a = world.agent_at(c)) {
        if (a->id != agent) {
          p.things.push_back(
              {rel, a->team == self.team ? ThingKind::FriendEntity : ThingKind::FoeEntity, "", -1});
        }
      }
      int marker = -1;
      for (const ClearEvent& ev : world.clear_events) {
        int until = ev.detonation_step - world.step;
        if (until > world.rules.warn_steps) continue;
        if (manhattan(c, ev.center) <= ev.radius) {
          marker = marker < 0 ? until : std::min(marker, until);
        }
      }
      if (marker >= 0) p.things.push_back({rel, ThingKind::ClearMarker, "", marker});
    }
  }

  for (EntKey k : component_of(world, EntKey::agent(agent))) {
    if (k == EntKey::agent(agent)) continue;
    p.attached_offsets.push_back(entity_pos(world, k) - self.pos);
  }
  std::sort(p.attached_offsets.begin(), p.attached_offsets.end());

  for (const Task& t : world.tasks) {
    if (t.deadline >= world.step) p.tasks.push_back(t);
  }
  std::sort(p.tasks.begin(), p.tasks.end(),
            [](const Task& a, const Task& b) { return a.name < b.name; });
  return p;
}

WorldState make_world(int width, int height, SimRules rules) {
  WorldState w;
  w.width = width;
  w.height = height;
  w.cells.assign(static_cast<size_t>(width) * height, Cell{});
  w.rules = rules;
  return w;
}

AgentId add_agent(WorldState& world, const std::string& team, Coord pos) {
  AgentEntity a;
  a.id = static_cast<AgentId>(world.agents.size());
  a.team = team;
  a.pos = pos;
  a.energy = world.rules.max_energy;
  world.agents.push_back(a);
  world.scores.emplace(team, 0);
  return a.id;
}

BlockId add_block(WorldState& world, Coord pos, const BlockType& type) {
  Block b;
  b.id = world.next_block_id++;
  b.pos = pos;
  b.type = type;
  world.block_at[pos] = b.id;
  world.blocks.emplace(b.id, b);
  return b.id;
}

void add_attachment(WorldState& world, EntKey a, EntKey b) {
  world.attachments.insert(std::minmax(a, b));
}

TaskShape random_shape(Rng& rng, int size, const std::vector<BlockType>& types,
                       bool entries_connected) {
  std::set<Coord> cells{{0, 0}};
  std::vector<Coord> picked;
  for (int i = 0; i < size; ++i) {
    std::set<Coord> frontier;
    // Growth points: the origin only until the first block exists; afterwards
    // the blocks themselves (always), plus the origin unless builds must stay
    // block-connected.
    auto grow_from = [&](const Coord& c) {
      for (const Coord& d : neighbor_offsets()) {
        Coord n = c + d;
        if (!cells.count(n)) frontier.insert(n);
      }
    };
    if (picked.empty()) {
      grow_from({0, 0});
    } else {
      for (const Coord& c : picked) grow_from(c);
      if (!entries_connected) grow_from({0, 0});
    }
    std::vector<Coord> options(frontier.begin(), frontier.end());
    Coord chosen = options[rng.bounded(static_cast<std::uint32_t>(options.size()))];
    cells.insert(chosen);
    picked.push_back(chosen);
  }
  TaskShape shape;
  for (const Coord& c : picked) {
    shape.entries.push_back(
        {c, types[rng.bounded(static_cast<std::uint32_t>(types.size()))]});
  }
  std::sort(shape.entries.begin(), shape.entries.end());
  return shape;
}

std::uint64_t world_hash(const WorldState& w) {
  Hasher h;
  h.i(w.width);
  h.i(w.height);
  h.i(w.step);
  for (const Cell& c : w.cells) {
    h.i(static_cast<int>(c.kind));
    if (c.kind == CellKind::Dispenser) h.str(c.dispenser_type);
  }
  for (const AgentEntity& a : w.agents) {
    h.i(a.id);
    h.str(a.team);
    h.coord(a.pos);
    h.i(a.energy);
    h.i(a.charge ? a.charge->second : -1);
    if (a.charge) h.coord(a.charge->first);
    h.i(static_cast<int>(a.last_action_result.outcome));
    h.i(static_cast<int>(a.last_action_result.reason));
  }
  for (const auto& [id, b] : w.blocks) {
    h.i(id);
    h.coord(b.pos);
    h.str(b.type);
  }
  for (const auto& [a, b] : w.attachments) {
    h.i(a.kind);
    h.i(a.id);
    h.i(b.kind);
    h.i(b.id);
  }
  for (const Task& t : w.tasks) {
    h.str(t.name);
    h.i(t.reward);
    h.i(t.deadline);
    for (const auto& e : t.shape.entries) {
      h.coord(e.pos);
      h.str(e.type);
    }
  }
  for (const ClearEvent& e : w.clear_events) {
    h.coord(e.center);
    h.i(e.radius);
    h.i(e.detonation_step);
  }
  for (const auto& [team, score] : w.scores) {
    h.str(team);
    h.ll(score);
  }
  h.u64(w.rng.state());
  h.i(w.next_block_id);
  h.i(w.gen.task_counter);
  return h.h;
}

std::vector<std::string> check_world_invariants(const WorldState& w) {
  std::vector<std::string> bad;
  std::set<Coord> agent_cells;
  for (const auto& a : w.agents) {
    if (!w.in_bounds(a.pos)) bad.push_back("agent out of bounds: " + std::to_string(a.id));
    if (!agent_cells.insert(a.pos).second)
      bad.push_back("two agents share a cell at " + coord_str(a.pos));
    if (a.energy < 0 || a.energy > w.rules.max_energy)
      bad.push_back("agent energy out of range: " + std::to_string(a.id));
  }
  std::set<Coord> block_cells;
  for (const auto& [id, b] : w.blocks) {
    if (!block_cells.insert(b.pos).second)
      bad.push_back("two blocks share a cell at " + coord_str(b.pos));
    if (w.cell(b.pos).kind == CellKind::Obstacle)
      bad.push_back("block inside obstacle at " + coord_str(b.pos));
    auto it = w.block_at.find(b.pos);
    if (it == w.block_at.end() || it->second != id)
      bad.push_back("block index mismatch at " + coord_str(b.pos));
  }
  if (w.block_at.size() != w.blocks.size()) bad.push_back("block index size mismatch");
  for (const auto& [a, b] : w.attachments) {
    bool a_ok = a.kind == EntKey::Agent ? a.id >= 0 && a.id < static_cast<int>(w.agents.size())
                                        : w.blocks.count(a.id) > 0;
    bool b_ok = b.kind == EntKey::Agent ? b.id >= 0 && b.id < static_cast<int>(w.agents.size())
                                        : w.blocks.count(b.id) > 0;
    if (!a_ok || !b_ok) {
      bad.push_back("attachment references missing entity");
      continue;
    }
    if (manhattan(entity_pos(w, a), entity_pos(w, b)) != 1)
      bad.push_back("attachment joins non-adjacent cells");
  }
  for (const Task& t : w.tasks) {
    if (!t.shape.valid()) bad.push_back("invalid task shape: " + t.name);
    if (t.reward <= 0) bad.push_back("non-positive reward: " + t.name);
  }
  return bad;
}

long long total_block_count(const WorldState& world) {
  return static_cast<long long>(world.blocks.size());
}

}  // namespace mapcsim
