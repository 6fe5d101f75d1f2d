#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mapcsim/world.hpp"

namespace mapcsim {

using GroupId = int;

enum class TerrainBelief : std::uint8_t { Unknown, Free, Obstacle, Dispenser, Goal };

// Flattened cell state: a freshly seen block shadows the terrain beneath it.
enum class CellState : std::uint8_t { Unknown, Free, Obstacle, Dispenser, Goal, BlockSeen };

struct CellBelief {
  TerrainBelief terrain = TerrainBelief::Unknown;
  BlockType dispenser_type;
  std::optional<BlockType> block;
  int last_seen = -1;   // newest observation of this cell
  int block_seen = -1;  // stamp of the block overlay
  int foe_seen = -1;    // stamp of a foe sighting here
};

// Shared belief map of one synchronized group, in group-frame coordinates.
// The frame origin is the founding agent's starting position.
struct GroupMap {
  GroupId group_id = -1;
  std::map<Coord, CellBelief> knowledge;
  std::map<AgentId, Coord> members;  // position in group frame

  // Dynamic overlays are ignored by planners once they have gone stale.
  int stale_ttl = 20;

  // Cells a member failed to move into, with the failure step; transient
  // blockers age out via blocked_ttl.
  std::map<Coord, int> move_failed;
  int blocked_ttl = 10;

  // Proven border cells: a move failed although the destination showed
  // nothing, which only the world's edge can cause. Permanent.
  std::set<Coord> edge_cells;

  CellState state_at(const Coord& c, int now) const;
  bool known(const Coord& c) const { return knowledge.count(c) > 0; }
  bool move_blocked(const Coord& c, int now) const {
    if (edge_cells.count(c)) return true;
    auto it = move_failed.find(c);
    return it != move_failed.end() && now - it->second <= blocked_ttl;
  }
};

// Writes one agent's percept into its group map: reported things at
// member-position + offset, unreported in-radius cells become free.
void integrate_percept(GroupMap& map, AgentId agent, const Percept& percept);

// Applies simulator feedback: members move only on confirmed success, and a
// blocked move stamps its destination cell in move_failed.
void track_own_action(GroupMap& map, AgentId agent, const Action& action,
                      const ActionResult& result);

// Position correction for an agent dragged by a connected partner's move.
void apply_drag(GroupMap& map, AgentId agent, const Coord& delta);

// Marks the destinations of a blocked move. Where the mover's own percept
// shows no blocker at all, the edge of the world is the only explanation and
// the cell is charted permanently; ambiguous cells get a decaying mark.
void mark_blocked_move(GroupMap& map, AgentId agent, Dir dir, const Percept& percept);

// Merges b into a; shift maps b-frame to a-frame. Per-cell conflicts go to the
// larger last_seen, ties keep a's belief. Result keeps a's group id.
GroupMap merge_maps(const GroupMap& a, const GroupMap& b, const Coord& shift);

// Up to k exploration targets: one frontier cell per angular sector around the
// member centroid while unknown-adjacent cells exist, else the k longest
// unseen cells; empty when the map is fully known and uniformly fresh.
std::vector<Coord> frontier_targets(const GroupMap& map, int k);

// Text grid of the terrain belief for log inspection.
std::string dump_map(const GroupMap& map);

}  // namespace mapcsim
