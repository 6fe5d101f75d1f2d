#include "mapcsim/beliefs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mapcsim {

CellState GroupMap::state_at(const Coord& c, int now) const {
  auto it = knowledge.find(c);
  if (it == knowledge.end()) return CellState::Unknown;
  const CellBelief& b = it->second;
  if (b.block && now - b.block_seen <= stale_ttl) return CellState::BlockSeen;
  switch (b.terrain) {
    case TerrainBelief::Unknown: return CellState::Unknown;
    case TerrainBelief::Free: return CellState::Free;
    case TerrainBelief::Obstacle: return CellState::Obstacle;
    case TerrainBelief::Dispenser: return CellState::Dispenser;
    case TerrainBelief::Goal: return CellState::Goal;
  }
  return CellState::Unknown;
}

void integrate_percept(GroupMap& map, AgentId agent, const Percept& percept) {
  auto member = map.members.find(agent);
  if (member == map.members.end()) return;
  const Coord base = member->second;
  const int r = percept.vision_radius;
  const int step = percept.step;

  std::map<Coord, const Thing*> terrain_report;
  std::map<Coord, const Thing*> block_report;
  std::map<Coord, bool> foe_report;
  for (const Thing& t : percept.things) {
    switch (t.kind) {
      case ThingKind::Obstacle:
      case ThingKind::Dispenser:
      case ThingKind::Goal:
        terrain_report[t.rel] = &t;
        break;
      case ThingKind::Block:
        block_report[t.rel] = &t;
        break;
      case ThingKind::FoeEntity:
        foe_report[t.rel] = true;
        break;
      default:
        break;
    }
  }

  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      if (std::abs(dx) + std::abs(dy) > r) continue;
      Coord rel{dx, dy};
      CellBelief& cell = map.knowledge[base + rel];
      cell.last_seen = step;

      auto tr = terrain_report.find(rel);
      if (tr == terrain_report.end()) {
        cell.terrain = TerrainBelief::Free;
        cell.dispenser_type.clear();
      } else if (tr->second->kind == ThingKind::Obstacle) {
        cell.terrain = TerrainBelief::Obstacle;
      } else if (tr->second->kind == ThingKind::Dispenser) {
        cell.terrain = TerrainBelief::Dispenser;
        cell.dispenser_type = tr->second->block_type;
      } else {
        cell.terrain = TerrainBelief::Goal;
      }

      auto br = block_report.find(rel);
      if (br != block_report.end()) {
        cell.block = br->second->block_type;
        cell.block_seen = step;
      } else {
        cell.block.reset();
        cell.block_seen = -1;
      }
      cell.foe_seen = foe_report.count(rel) ? step : -1;
    }
  }
}

void track_own_action(GroupMap& map, AgentId agent, const Action& action,
                      const ActionResult& result) {
  if (action.kind != ActionKind::Move) return;
  if (result.outcome != ActionOutcome::Success) return;
  auto it = map.members.find(agent);
  if (it != map.members.end()) it->second += offset(action.dir);
}

void mark_blocked_move(GroupMap& map, AgentId agent, Dir dir, const Percept& percept) {
  auto member = map.members.find(agent);
  if (member == map.members.end()) return;
  const Coord base = member->second;
  const Coord delta = offset(dir);

  // Destination offsets of the whole component, relative to the agent.
  std::vector<Coord> dest_rels{delta};
  for (const Coord& off : percept.attached_offsets) dest_rels.push_back(off + delta);

  auto blocker_at = [&](const Coord& rel) {
    // The component's own cells travel along and never block.
    if (rel == Coord{0, 0}) return false;
    for (const Coord& off : percept.attached_offsets) {
      if (rel == off) return false;
    }
    for (const Thing& t : percept.things) {
      if (!(t.rel == rel)) continue;
      if (t.kind == ThingKind::Obstacle || t.kind == ThingKind::Block ||
          t.kind == ThingKind::FriendEntity || t.kind == ThingKind::FoeEntity)
        return true;
    }
    return false;
  };

  bool any_visible_cause = false;
  std::vector<Coord> unexplained;
  for (const Coord& rel : dest_rels) {
    if (manhattan(rel) > percept.vision_radius) continue;  // cannot classify
    if (blocker_at(rel)) {
      any_visible_cause = true;
    } else {
      unexplained.push_back(rel);
    }
  }

  if (!any_visible_cause) {
    // Nothing visible anywhere along the swept cells: the border did it. Any
    // innocent companion cells are right next to the border and worthless.
    for (const Coord& rel : unexplained) map.edge_cells.insert(base + rel);
    return;
  }
  map.move_failed[base + delta] = percept.step;
}

void apply_drag(GroupMap& map, AgentId agent, const Coord& delta) {
  auto it = map.members.find(agent);
  if (it != map.members.end()) it->second += delta;
}

GroupMap merge_maps(const GroupMap& a, const GroupMap& b, const Coord& shift) {
  GroupMap out = a;
  for (const auto& [pos, belief] : b.knowledge) {
    Coord target = pos + shift;
    auto it = out.knowledge.find(target);
    if (it == out.knowledge.end() || belief.last_seen > it->second.last_seen) {
      out.knowledge[target] = belief;
    }
  }
  for (const auto& [pos, stamp] : b.move_failed) {
    Coord target = pos + shift;
    auto it = out.move_failed.find(target);
    if (it == out.move_failed.end() || stamp > it->second) out.move_failed[target] = stamp;
  }
  for (const Coord& pos : b.edge_cells) out.edge_cells.insert(pos + shift);
  for (const auto& [id, pos] : b.members) {
    out.members[id] = pos + shift;
  }
  return out;
}

std::vector<Coord> frontier_targets(const GroupMap& map, int k) {
  if (k < 1) return {};
  const int now = [&] {
    int best = 0;
    for (const auto& [_, cell] : map.knowledge) best = std::max(best, cell.last_seen);
    return best;
  }();

  auto traversable = [&](const Coord& c) {
    CellState s = map.state_at(c, now);
    return s != CellState::Obstacle && s != CellState::Unknown;
  };

  std::vector<Coord> frontier;
  for (const auto& [pos, cell] : map.knowledge) {
    (void)cell;
    if (!traversable(pos)) continue;
    for (const Coord& d : neighbor_offsets()) {
      Coord n = pos + d;
      // Unknown space behind a charted edge is not explorable.
      if (!map.known(n) && !map.move_blocked(n, now)) {
        frontier.push_back(pos);
        break;
      }
    }
  }

  if (!frontier.empty()) {
    double cx = 0, cy = 0;
    if (!map.members.empty()) {
      for (const auto& [_, pos] : map.members) {
        cx += pos.x;
        cy += pos.y;
      }
      cx /= static_cast<double>(map.members.size());
      cy /= static_cast<double>(map.members.size());
    }
    // One angular sector per requested target, swept around the centroid.
    std::vector<std::vector<Coord>> sectors(static_cast<size_t>(k));
    const double two_pi = 2.0 * 3.14159265358979323846;
    for (const Coord& c : frontier) {
      double ang = std::atan2(static_cast<double>(c.y) - cy, static_cast<double>(c.x) - cx);
      int idx = static_cast<int>((ang + two_pi / 2.0) / (two_pi / k));
      idx = std::clamp(idx, 0, k - 1);
      sectors[static_cast<size_t>(idx)].push_back(c);
    }
    std::vector<Coord> out;
    for (const auto& sector : sectors) {
      if (sector.empty()) continue;
      double sx = 0, sy = 0;
      for (const Coord& c : sector) {
        sx += c.x;
        sy += c.y;
      }
      sx /= static_cast<double>(sector.size());
      sy /= static_cast<double>(sector.size());
      Coord best = sector.front();
      double best_d = std::numeric_limits<double>::max();
      for (const Coord& c : sector) {
        double dx = c.x - sx, dy = c.y - sy;
        double d = dx * dx + dy * dy;
        if (d < best_d || (d == best_d && c < best)) {
          best_d = d;
          best = c;
        }
      }
      out.push_back(best);
    }
    return out;
  }

  // Fully known: revisit the longest unseen cells, unless uniformly fresh.
  int lo = std::numeric_limits<int>::max(), hi = std::numeric_limits<int>::min();
  for (const auto& [pos, cell] : map.knowledge) {
    (void)pos;
    lo = std::min(lo, cell.last_seen);
    hi = std::max(hi, cell.last_seen);
  }
  if (map.knowledge.empty() || lo == hi) return {};
  std::vector<std::pair<int, Coord>> stale;
  for (const auto& [pos, cell] : map.knowledge) {
    if (traversable(pos)) stale.emplace_back(cell.last_seen, pos);
  }
  std::sort(stale.begin(), stale.end());
  std::vector<Coord> out;
  for (const auto& [_, pos] : stale) {
    if (static_cast<int>(out.size()) >= k) break;
    out.push_back(pos);
  }
  return out;
}

std::string dump_map(const GroupMap& map) {
  if (map.knowledge.empty()) return "";
  int min_x = std::numeric_limits<int>::max(), max_x = std::numeric_limits<int>::min();
  int min_y = min_x, max_y = max_x;
  for (const auto& [pos, _] : map.knowledge) {
    min_x = std::min(min_x, pos.x);
    max_x = std::max(max_x, pos.x);
    min_y = std::min(min_y, pos.y);
    max_y = std::max(max_y, pos.y);
  }
  std::string out;
  for (int y = min_y; y <= max_y; ++y) {
    for (int x = min_x; x <= max_x; ++x) {
      auto it = map.knowledge.find({x, y});
      char ch = '?';
      if (it != map.knowledge.end()) {
        switch (it->second.terrain) {
          case TerrainBelief::Unknown: ch = '?'; break;
          case TerrainBelief::Free: ch = '.'; break;
          case TerrainBelief::Obstacle: ch = '#'; break;
          case TerrainBelief::Dispenser: ch = 'd'; break;
          case TerrainBelief::Goal: ch = 'g'; break;
        }
      }
      out += ch;
    }
    out += '\n';
  }
  return out;
}

}  // namespace mapcsim
