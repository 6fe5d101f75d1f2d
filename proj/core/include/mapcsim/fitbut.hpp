#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mapcsim/engine.hpp"
#include "mapcsim/pathfind.hpp"
#include "mapcsim/reservation.hpp"

namespace mapcsim {

enum class PlanKind : std::uint8_t {
  GoSubmit, Split, Dodge, GoConnect, Hoard, Roam, GoNearSubmit, Dig
};
const char* plan_kind_str(PlanKind k);

// A full action stack serving one purpose. Rebuilt from scratch every step;
// only the first action is ever executed.
struct OptionPlan {
  PlanKind kind = PlanKind::Roam;
  std::vector<Action> actions;
  std::string task_name;   // GoSubmit / GoConnect
  AgentId partner = -1;    // GoConnect
  Coord target;            // travel destination, diagnostics
  bool split_after = false;  // GoConnect giver side: detach duty once joined

  int length() const { return static_cast<int>(actions.size()); }
};

struct ReasonerConfig {
  // Joint structure limit counts agents plus blocks.
  int max_structure_size = 10;
  // Directly attached blocks per agent acquired by hoarding.
  int max_hoard = 1;
  // GoSubmit plans shorter than this outrank Dodge.
  int go_submit_short_len = 3;
  // Pair placements kept per task before exact path scoring.
  int candidate_cap = 64;
  int max_iterations = 2500;
  // Hoard gate per block type; group-level diversity management hook.
  std::function<bool(const BlockType&)> is_block_interesting;

  // Step budget parameters, interpreted by the match runner.
  std::string budget_mode = "wall";  // wall | ops | unlimited
  int budget_ms = 500;
  std::uint64_t budget_ops = 0;

  bool interesting(const BlockType& t) const {
    return is_block_interesting ? is_block_interesting(t) : true;
  }
};

// One group member as the group phase sees it.
struct GroupAgentView {
  BodyState body;
  Coord frame_pos;
};

std::vector<Coord> footprint_cells(const GroupAgentView& v);  // frame coords, whole component

// A scored two-agent placement into a task shape.
struct CandidateStructure {
  std::string task_name;
  AgentId agent_a = -1;  // keeper: carries the joint structure afterwards
  AgentId agent_b = -1;  // giver: detaches after the connect
  Coord stance_a, stance_b;      // frame cells at connect time
  int orient_a = 0, orient_b = 0;
  Coord named_a, named_b;        // connect-named block offsets, rel each agent
  std::vector<TaskShapeEntry> placed_a, placed_b;  // shape entries covered
  int structure_size = 0;        // agents + blocks once joined
  int metric = 0;                // reward - assembly steps
  int path_len_a = 0, path_len_b = 0;
};

struct AssembleResult {
  std::map<AgentId, OptionPlan> plans;          // GoSubmit and GoConnect
  std::vector<CandidateStructure> candidates;   // generated pool (already trimmed)
  std::vector<CandidateStructure> chosen;       // greedy selection
};

// Local fallback options: Dodge from pending clear markers, GoNearSubmit to a
// remembered goal, Dig at the nearest obstacle (skipped while Dodge exists).
std::vector<OptionPlan> compute_local_options(const GroupMap& map, const GroupAgentView& agent,
                                              const Percept& percept, const SimRules& rules,
                                              const ReasonerConfig& cfg);

// The six-step connection-candidates algorithm.
AssembleResult assemble_tasks(const GroupMap& map, const std::vector<GroupAgentView>& agents,
                              const std::vector<Task>& tasks, const ReasonerConfig& cfg,
                              StepBudget& budget);

// AssembleTasks, then Hoard, then Explore; agents holding an assemble plan are
// excluded from the rest. Partial results on budget exhaustion are valid.
std::map<AgentId, std::vector<OptionPlan>> compute_group_options(
    const GroupMap& map, const std::vector<GroupAgentView>& agents,
    const std::vector<Task>& tasks, const SimRules& rules, const ReasonerConfig& cfg,
    StepBudget& budget);

// Plans ordered by selection priority; best first. Split participates only
// while the agent is still connected.
std::vector<const OptionPlan*> plan_priority_order(const std::vector<OptionPlan>& plans,
                                                   bool connected_to_agent, int short_len);

const OptionPlan* select_plan(const std::vector<OptionPlan>& plans, bool connected_to_agent,
                              int short_len = 3);

// Walks plans best-first, proposing each plan's first action to the
// reservation map; first approval wins, otherwise skip.
Action act_step(const std::vector<const OptionPlan*>& ordered, ReservationMap& res, AgentId agent,
                const std::vector<Coord>& current_cells,
                const OptionPlan** chosen = nullptr,
                std::vector<std::pair<PlanKind, bool>>* trace = nullptr);

std::unique_ptr<TeamEngine> make_fitbut(const TeamContext& ctx, const ReasonerConfig& cfg);

}  // namespace mapcsim
