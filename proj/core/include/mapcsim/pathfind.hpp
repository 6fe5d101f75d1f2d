#pragma once

#include <functional>
#include <set>
#include <vector>

#include "mapcsim/beliefs.hpp"

namespace mapcsim {

// Cells occupied by an agent plus its attached blocks, relative to the agent.
// Orientation 0 is the current arrangement; orientation k is k clockwise
// quarter-turns of it.
struct Footprint {
  std::vector<Coord> offsets{{0, 0}};

  static Footprint single() { return Footprint{}; }
  static Footprint with_blocks(const std::vector<Coord>& block_offsets) {
    Footprint f;
    for (const Coord& c : block_offsets) f.offsets.push_back(c);
    return f;
  }
  std::vector<Coord> at(int orient) const;
  bool rotation_symmetric() const;
};

enum class PathOutcome : std::uint8_t { Path, CapExceeded, Exhausted };

struct PathResult {
  PathOutcome outcome = PathOutcome::Exhausted;
  std::vector<Action> actions;  // moves and rotations only
  int iterations = 0;
  int cost = 0;

  bool found() const { return outcome == PathOutcome::Path; }
  int length() const { return static_cast<int>(actions.size()); }
};

struct PathQuery {
  Coord start;
  int start_orient = 0;
  Footprint footprint;
  std::vector<Coord> goal_cells;  // heuristic anchors; default goal test
  // Optional override; receives (cell, orientation).
  std::function<bool(const Coord&, int)> is_goal;
  // Cells of the agent's own current structure; exempt from block avoidance
  // since those remembered blocks travel with the agent.
  std::set<Coord> ignore_cells;
  int max_iterations = 2500;
  int now = 0;  // staleness reference for dynamic overlays
};

// Bounded A* over the belief map. States are (cell, orientation); moves cost
// 1 through known-free cells and 2 through unknown ones, rotations cost 1 and
// are searched only for rotation-asymmetric footprints. Search is confined to
// the knowledge bounding box plus a margin, so exhaustion is well-defined.
PathResult a_star(const GroupMap& map, const PathQuery& q);

// Shortest action sequence (uniform-cost) to a placement whose footprint
// avoids every danger cell.
PathResult escape_path(const GroupMap& map, const Coord& start, const Footprint& footprint,
                       const std::set<Coord>& danger_cells, const std::set<Coord>& ignore_cells,
                       int now);

}  // namespace mapcsim
