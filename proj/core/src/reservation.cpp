#include "mapcsim/reservation.hpp"

#include <algorithm>

namespace mapcsim {

void reset_reservations(ReservationMap& res, int step) {
  res.step = step;
  res.cell_claims.clear();
  res.resource_claims.clear();
}

void claim_footprint(ReservationMap& res, AgentId agent, const std::vector<Coord>& cells) {
  for (const Coord& c : cells) res.cell_claims.emplace(c, agent);
}

ReserveOutcome reserve_action(ReservationMap& res, AgentId agent, const Action& action,
                              const std::vector<Coord>& current_cells) {
  std::set<Coord> needed(current_cells.begin(), current_cells.end());
  std::vector<std::string> resources;

  switch (action.kind) {
    case ActionKind::Move: {
      Coord d = offset(action.dir);
      for (const Coord& c : current_cells) needed.insert(c + d);
      break;
    }
    case ActionKind::Rotate: {
      // Pivot is the agent cell: first current cell by convention of callers
      // passing [self, blocks...]; recompute defensively as the claim set is
      // order-insensitive anyway.
      if (!current_cells.empty()) {
        Coord pivot = current_cells.front();
        for (const Coord& c : current_cells) {
          needed.insert(pivot + rotate(c - pivot, action.rot));
        }
      }
      break;
    }
    case ActionKind::Request: {
      if (!current_cells.empty()) {
        Coord spawn = current_cells.front() + offset(action.dir);
        needed.insert(spawn);
        resources.push_back("dispenser@" + coord_str(spawn));
      }
      break;
    }
    case ActionKind::Attach: {
      if (!current_cells.empty()) needed.insert(current_cells.front() + offset(action.dir));
      break;
    }
    case ActionKind::Clear: {
      if (!current_cells.empty()) needed.insert(current_cells.front() + action.target);
      break;
    }
    case ActionKind::Connect: {
      AgentId lo = std::min(agent, action.partner);
      AgentId hi = std::max(agent, action.partner);
      resources.push_back("connect:" + std::to_string(lo) + ":" + std::to_string(hi));
      break;
    }
    case ActionKind::Detach:
    case ActionKind::Submit:
    case ActionKind::Skip:
      break;
  }

  for (const Coord& c : needed) {
    auto it = res.cell_claims.find(c);
    if (it != res.cell_claims.end() && it->second != agent) {
      return {false, it->second};
    }
  }
  for (const std::string& r : resources) {
    auto it = res.resource_claims.find(r);
    if (it == res.resource_claims.end()) continue;
    // A connect pairing is mutual: the named partner holding the same key is
    // the expected counterpart, anyone else is a conflict.
    if (action.kind == ActionKind::Connect && it->second == action.partner) continue;
    if (it->second != agent) return {false, it->second};
  }

  for (const Coord& c : needed) res.cell_claims.emplace(c, agent);
  for (const std::string& r : resources) res.resource_claims.emplace(r, agent);
  return {true, -1};
}

}  // namespace mapcsim
