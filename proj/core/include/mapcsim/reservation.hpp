#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "mapcsim/world.hpp"

namespace mapcsim {

// Per-group, per-step claim table over next-step outcomes. Claims cover an
// action's success cells and the current footprint (the failure outcome), so
// any mix of per-agent success/failure leaves no two claimants on one cell.
struct ReservationMap {
  int step = 0;
  std::map<Coord, AgentId> cell_claims;          // group-frame coordinates
  std::map<std::string, AgentId> resource_claims;
};

struct ReserveOutcome {
  bool approved = false;
  AgentId conflicting = -1;
};

void reset_reservations(ReservationMap& res, int step);

// Step-start claim of an agent's current cells; makes the stay-put outcome of
// every member visible to all proposals regardless of proposal order.
void claim_footprint(ReservationMap& res, AgentId agent, const std::vector<Coord>& cells);

// Approves and records the action's needed cells/resources, or rejects with
// the first conflicting claimant and records nothing. current_cells[0] must be
// the agent's own cell (rotation pivot, request origin).
ReserveOutcome reserve_action(ReservationMap& res, AgentId agent, const Action& action,
                              const std::vector<Coord>& current_cells);

}  // namespace mapcsim
