#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mapcsim/geometry.hpp"
#include "mapcsim/rng.hpp"

namespace mapcsim {

using AgentId = int;
using BlockId = int;
using BlockType = std::string;

enum class CellKind : std::uint8_t { Free, Obstacle, Dispenser, Goal };

struct Cell {
  CellKind kind = CellKind::Free;
  BlockType dispenser_type;  // set when kind == Dispenser
};

struct TaskShapeEntry {
  Coord pos;  // offset relative to the submitting agent
  BlockType type;
  friend bool operator==(const TaskShapeEntry&, const TaskShapeEntry&) = default;
  friend bool operator<(const TaskShapeEntry& a, const TaskShapeEntry& b) {
    if (!(a.pos == b.pos)) return a.pos < b.pos;
    return a.type < b.type;
  }
};

// Offsets are nonzero, distinct, and together with the origin form one
// 4-connected component.
struct TaskShape {
  std::vector<TaskShapeEntry> entries;  // kept sorted
  bool valid() const;
};

struct Task {
  std::string name;
  int reward = 0;
  int deadline = 0;  // last step at which a submit is accepted
  TaskShape shape;
};

struct ClearEvent {
  Coord center;
  int radius = 0;
  int detonation_step = 0;
};

enum class ActionKind : std::uint8_t {
  Move, Rotate, Attach, Detach, Connect, Request, Clear, Submit, Skip
};

struct Action {
  ActionKind kind = ActionKind::Skip;
  Dir dir = Dir::North;          // move, attach, detach, request
  Rot rot = Rot::Cw;             // rotate
  AgentId partner = -1;          // connect
  Coord own_block;               // connect: own named block, relative to self
  Coord partner_block;           // connect: partner's named block, relative to partner
  Coord target;                  // clear, relative to self
  std::string task_name;         // submit

  static Action move(Dir d) { return {ActionKind::Move, d, Rot::Cw, -1, {}, {}, {}, {}}; }
  static Action rotate(Rot r) { return {ActionKind::Rotate, Dir::North, r, -1, {}, {}, {}, {}}; }
  static Action attach(Dir d) { return {ActionKind::Attach, d, Rot::Cw, -1, {}, {}, {}, {}}; }
  static Action detach(Dir d) { return {ActionKind::Detach, d, Rot::Cw, -1, {}, {}, {}, {}}; }
  static Action connect(AgentId p, Coord own, Coord theirs) {
    return {ActionKind::Connect, Dir::North, Rot::Cw, p, own, theirs, {}, {}};
  }
  static Action request(Dir d) { return {ActionKind::Request, d, Rot::Cw, -1, {}, {}, {}, {}}; }
  static Action clear(Coord rel) { return {ActionKind::Clear, Dir::North, Rot::Cw, -1, {}, {}, rel, {}}; }
  static Action submit(std::string task) {
    return {ActionKind::Submit, Dir::North, Rot::Cw, -1, {}, {}, {}, std::move(task)};
  }
  static Action skip() { return {}; }

  friend bool operator==(const Action&, const Action&) = default;
};

enum class ActionOutcome : std::uint8_t { Success, Charging, Failed };

enum class FailReason : std::uint8_t {
  None, PathBlocked, MultiAgentRotation, NotOnGoal, WrongStructure, DeadlinePassed,
  OtherAgentAttached, InsufficientEnergy, InvalidTarget, InvalidPartner
};

struct ActionResult {
  ActionOutcome outcome = ActionOutcome::Success;
  FailReason reason = FailReason::None;

  bool ok() const { return outcome != ActionOutcome::Failed; }
  static ActionResult success() { return {ActionOutcome::Success, FailReason::None}; }
  static ActionResult charging() { return {ActionOutcome::Charging, FailReason::None}; }
  static ActionResult failure(FailReason r) { return {ActionOutcome::Failed, r}; }
  friend bool operator==(const ActionResult&, const ActionResult&) = default;
};

const char* outcome_str(ActionOutcome o);
const char* fail_reason_str(FailReason r);

// What physically blocked a failed move/rotate, relative to the acting agent's
// team. Logged for post-hoc collision audits; never exposed in percepts.
enum class BlockedBy : std::uint8_t { None, Edge, Terrain, Block, Friend, Foe };
const char* blocked_by_str(BlockedBy b);

struct AgentEntity {
  AgentId id = -1;
  std::string team;
  Coord pos;
  int energy = 0;
  // In-progress clear: world cell under charge and accumulated steps.
  std::optional<std::pair<Coord, int>> charge;
  ActionResult last_action_result;
};

struct Block {
  BlockId id = -1;
  Coord pos;
  BlockType type;
};

// Attachment endpoints: agents and blocks.
struct EntKey {
  enum Kind : std::uint8_t { Agent = 0, BlockEnt = 1 };
  Kind kind = Agent;
  int id = -1;

  static EntKey agent(AgentId a) { return {Agent, a}; }
  static EntKey block(BlockId b) { return {BlockEnt, b}; }
  friend bool operator==(const EntKey&, const EntKey&) = default;
  friend bool operator<(const EntKey& a, const EntKey& b) {
    if (a.kind != b.kind) return a.kind < b.kind;
    return a.id < b.id;
  }
};

using AttachEdge = std::pair<EntKey, EntKey>;  // normalized: first < second

struct SimRules {
  int vision_radius = 5;
  int max_energy = 300;
  int energy_recharge = 2;
  int clear_cost = 30;
  int clear_charge_steps = 3;
  int clear_range = 2;
  int clear_event_radius = 3;
  int warn_steps = 5;
};

// In-world task/event generation, driven by the world's own rng stream.
struct GenRules {
  int task_spawn_period = 0;     // 0 disables task spawning
  std::vector<int> shape_sizes = {2};
  int max_active_tasks = 3;
  int deadline_horizon = 80;
  int reward_per_block = 10;
  // Recurring mode re-issues the first generated shape of each size instead
  // of drawing a fresh one per spawn.
  bool recurring = false;
  // Restrict generation to shapes whose blocks are mutually 4-connected
  // (excluding the submit stance), i.e. buildable by pairwise connects.
  bool entries_connected = false;
  double clear_event_rate = 0.0;
  std::vector<BlockType> block_types;
  int task_counter = 0;
  std::map<int, TaskShape> recurring_shapes;
};

struct WorldState {
  int width = 0;
  int height = 0;
  std::vector<Cell> cells;  // row-major, y * width + x

  std::vector<AgentEntity> agents;        // index == id
  std::map<BlockId, Block> blocks;
  std::map<Coord, BlockId> block_at;      // position index
  std::set<AttachEdge> attachments;
  std::vector<Task> tasks;
  std::vector<ClearEvent> clear_events;
  int step = 0;
  std::map<std::string, long long> scores;  // per team
  Rng rng;

  SimRules rules;
  GenRules gen;
  bool obstacle_regrowth = false;

  bool in_bounds(const Coord& c) const {
    return c.x >= 0 && c.y >= 0 && c.x < width && c.y < height;
  }
  const Cell& cell(const Coord& c) const { return cells[c.y * width + c.x]; }
  Cell& cell(const Coord& c) { return cells[c.y * width + c.x]; }
  const AgentEntity* agent_at(const Coord& c) const;
  const Block* block_at_pos(const Coord& c) const;
  const Task* find_task(const std::string& name) const;

  BlockId next_block_id = 0;
};

// Percepts -------------------------------------------------------------

enum class ThingKind : std::uint8_t {
  FriendEntity, FoeEntity, Block, Dispenser, Obstacle, Goal, ClearMarker
};
const char* thing_kind_str(ThingKind k);

struct Thing {
  Coord rel;
  ThingKind kind;
  BlockType block_type;  // Block / Dispenser
  int countdown = -1;    // ClearMarker: steps until detonation
  friend bool operator==(const Thing&, const Thing&) = default;
};

struct Percept {
  int step = 0;
  AgentId self = -1;
  std::string team;
  int energy = 0;
  ActionResult last_action_result;
  int vision_radius = 0;
  std::vector<Thing> things;             // sorted by (rel, kind, type)
  std::vector<Coord> attached_offsets;   // transitive component of self, self excluded
  std::vector<Task> tasks;               // active tasks
  long long team_score = 0;
};

// Step events ----------------------------------------------------------

struct WorldEvent {
  enum class Kind : std::uint8_t {
    ActionResolved, TaskSpawned, TaskExpired, Submitted, ClearSpawned, Detonated
  };
  Kind kind;
  int step = 0;
  AgentId agent = -1;
  Action action;                 // ActionResolved
  ActionResult result;           // ActionResolved
  BlockedBy blocked_by = BlockedBy::None;
  Task task;                     // TaskSpawned / TaskExpired / Submitted
  long long new_score = 0;       // Submitted
  ClearEvent clear;              // ClearSpawned / Detonated
  int blocks_destroyed = 0;      // Detonated
};

struct StepOutcome {
  std::map<AgentId, Percept> percepts;
  std::vector<WorldEvent> events;
};

// Operations -----------------------------------------------------------

// Resolves one simulation step: actions in ascending agent id, then due
// detonations, task expiry, spawning, recharge, step increment, percepts.
// Invalid actions resolve to failure results; this never throws.
StepOutcome step_world(WorldState& world, const std::map<AgentId, Action>& actions);

Percept gen_percept(const WorldState& world, AgentId agent);

// Translates the agent's whole attached component by one cell, dragging any
// other agents connected through blocks.
ActionResult move_component(WorldState& world, AgentId agent, Dir dir, BlockedBy* blocked = nullptr);

ActionResult resolve_submit(WorldState& world, AgentId agent, const std::string& task_name);

ActionResult resolve_clear(WorldState& world, AgentId agent, const Coord& rel);

// Component helpers (transitive over attachment edges).
std::vector<EntKey> component_of(const WorldState& world, EntKey start);
std::vector<std::pair<Coord, BlockType>> carried_blocks(const WorldState& world, AgentId agent);
int component_agent_count(const WorldState& world, AgentId agent);
// Direct agent-to-block attachment edges; hoarding creates exactly these.
int direct_block_count(const WorldState& world, AgentId agent);

Coord entity_pos(const WorldState& world, EntKey k);

// Small builders shared by the generator and scripted test worlds.
WorldState make_world(int width, int height, SimRules rules = {});
AgentId add_agent(WorldState& world, const std::string& team, Coord pos);
BlockId add_block(WorldState& world, Coord pos, const BlockType& type);
void add_attachment(WorldState& world, EntKey a, EntKey b);

// Random 4-connected task shape of `size` entries around the origin. With
// entries_connected the blocks also form one component among themselves.
TaskShape random_shape(Rng& rng, int size, const std::vector<BlockType>& types,
                       bool entries_connected = false);

// Stable 64-bit digest of the full world state, for replay verification.
std::uint64_t world_hash(const WorldState& world);

// Structural invariant audit; returns human-readable violations (empty = ok).
std::vector<std::string> check_world_invariants(const WorldState& world);

long long total_block_count(const WorldState& world);

}  // namespace mapcsim
