#pragma once

#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mapcsim/engine.hpp"
#include "mapcsim/pathfind.hpp"

namespace mapcsim {

// Scenario automaton states shared by block-scenario roles; lieutenants have
// no Submit state, commanders have no Detach state.
enum class AutoState : std::uint8_t {
  GoToDispenser, GetBlock, GoToGoalPosition, RotateBlock, Connect, Detach, Submit, Done, Failed
};
const char* auto_state_str(AutoState s);

enum class AutoEvent : std::uint8_t { GoalSucceeded, GoalFailed, BlockLost };

struct ScenarioAutomaton {
  bool commander = false;
  AutoState state = AutoState::GoToDispenser;
  int failures = 0;     // consecutive failures of the current goal
  bool detour = false;  // random traversal owed before retrying GoToDispenser
  int retry_cap = 5;
};

// Advances on goal feedback: success walks the chain, failure retries (with a
// random-walk detour first for GoToDispenser), a lost block restarts from the
// dispenser, and too many consecutive failures end in Failed.
AutoState step_automaton(ScenarioAutomaton& a, AutoEvent ev);

// Per-role build assignment produced for a task shape.
struct BlockRole {
  enum class Join : std::uint8_t { ConnectToStructure, DeliverForAttach };
  BlockType block_type;
  Coord shape_entry;      // target cell of this role's block, shape coords
  Coord stance;           // standing cell at build time; commander is (0,0)
  Dir carried_dir = Dir::North;  // facing of the carried block when joining
  Join join = Join::ConnectToStructure;
  Coord commander_named;  // structure block the commander names for the connect
  int connect_order = 0;  // commander 0, lieutenants join in 1..k-1
};

struct PlacementPlan {
  bool ok = false;
  std::string error;
  std::vector<BlockRole> roles;  // [0] commander, then lieutenants
};

// Generative replacement for per-shape hand enumeration: the commander takes
// an origin-adjacent entry and a goal stance, lieutenants get the remaining
// entries with non-colliding stances and join directions such that sequential
// pairwise joins build the shape.
PlacementPlan plan_block_placements(const TaskShape& shape, int k);

struct WalkGoal {
  Coord target;
  PathResult path;
};

// Random direction, distance uniform in [d_min, d_max], iteration-capped path.
WalkGoal walk_sync_goal(const GroupMap& map, const Coord& from, Rng& rng, int d_min, int d_max,
                        int max_iterations);

struct ClearGoal {
  bool ok = false;
  FailReason why = FailReason::None;  // InsufficientEnergy / InvalidTarget
  Coord obstacle;
  std::vector<Action> actions;
};

// Path to the nearest remembered obstacle plus the charged clear sequence.
ClearGoal search_destroy_goal(const GroupMap& map, const Coord& from, int energy,
                              const SimRules& rules, int max_iterations);

struct DeSouchesConfig {
  int walk_min = 5;
  int walk_max = 15;
  int retry_cap = 5;
  int max_iterations = 2500;
};

std::unique_ptr<TeamEngine> make_desouches(const TeamContext& ctx, const DeSouchesConfig& cfg);

}  // namespace mapcsim
