#include "oracles.hpp"

#include <algorithm>
#include <deque>
#include <map>

namespace mapcsim::oracle {

std::optional<int> bfs_shortest(const GroupMap& map, const Coord& start, const Coord& goal) {
  auto passable = [&](const Coord& c) {
    auto it = map.knowledge.find(c);
    if (it == map.knowledge.end()) return false;  // fully-known maps only
    return it->second.terrain != TerrainBelief::Obstacle && !it->second.block &&
           it->second.foe_seen < 0;
  };
  if (!passable(start) && !(start == goal)) {
    // Start is wherever the agent stands; only the goal needs checking.
  }
  std::map<Coord, int> dist{{start, 0}};
  std::deque<Coord> queue{start};
  while (!queue.empty()) {
    Coord c = queue.front();
    queue.pop_front();
    if (c == goal) return dist[c];
    for (const Coord& d : neighbor_offsets()) {
      Coord n = c + d;
      if (dist.count(n) || !passable(n)) continue;
      dist[n] = dist[c] + 1;
      queue.push_back(n);
    }
  }
  return std::nullopt;
}

bool submit_should_succeed(const WorldState& world, AgentId agent, const std::string& task_name) {
  const Task* task = world.find_task(task_name);
  if (!task) return false;
  if (world.step > task->deadline) return false;
  const AgentEntity& ag = world.agents[agent];
  if (world.cell(ag.pos).kind != CellKind::Goal) return false;
  if (component_agent_count(world, agent) != 1) return false;
  auto carried = carried_blocks(world, agent);
  if (carried.size() != task->shape.entries.size()) return false;
  for (const auto& e : task->shape.entries) {
    bool found = false;
    for (const auto& [off, type] : carried) {
      if (off == e.pos && type == e.type) found = true;
    }
    if (!found) return false;
  }
  return true;
}

std::vector<TaskShape> enumerate_shapes(int size, const BlockType& type) {
  // Grow connected sets around the origin, deduplicating by the cell set.
  std::set<std::set<Coord>> seen;
  std::vector<std::set<Coord>> level{{}};
  for (int n = 0; n < size; ++n) {
    std::vector<std::set<Coord>> next;
    for (const auto& cells : level) {
      std::set<Coord> all = cells;
      all.insert({0, 0});
      std::set<Coord> frontier;
      for (const Coord& c : all) {
        for (const Coord& d : neighbor_offsets()) {
          Coord x = c + d;
          if (!(x == Coord{0, 0}) && !cells.count(x)) frontier.insert(x);
        }
      }
      for (const Coord& f : frontier) {
        std::set<Coord> grown = cells;
        grown.insert(f);
        if (n + 1 == size) {
          if (seen.insert(grown).second) next.push_back(grown);
        } else {
          next.push_back(grown);
        }
      }
    }
    // Dedupe intermediate levels too, or the growth explodes.
    if (n + 1 < size) {
      std::set<std::set<Coord>> uniq(next.begin(), next.end());
      next.assign(uniq.begin(), uniq.end());
    }
    level = std::move(next);
  }
  std::vector<TaskShape> out;
  for (const auto& cells : level) {
    TaskShape s;
    for (const Coord& c : cells) s.entries.push_back({c, type});
    std::sort(s.entries.begin(), s.entries.end());
    out.push_back(std::move(s));
  }
  return out;
}

int count_rotation_classes(const std::vector<TaskShape>& shapes) {
  std::set<std::set<Coord>> canon;
  for (const TaskShape& s : shapes) {
    std::set<Coord> best;
    for (int r = 0; r < 4; ++r) {
      std::set<Coord> rotated;
      for (const auto& e : s.entries) rotated.insert(rotate_cw(e.pos, r));
      if (r == 0 || rotated < best) best = rotated;
    }
    canon.insert(best);
  }
  return static_cast<int>(canon.size());
}

bool valid_pair_placement(const TaskShape& task, const std::vector<TaskShapeEntry>& placed_a,
                          const std::vector<TaskShapeEntry>& placed_b) {
  auto is_sub = [&](const std::vector<TaskShapeEntry>& part) {
    for (const auto& e : part) {
      bool found = false;
      for (const auto& t : task.entries) {
        if (t.pos == e.pos && t.type == e.type) found = true;
      }
      if (!found) return false;
    }
    return true;
  };
  if (placed_a.empty() || placed_b.empty()) return false;
  if (!is_sub(placed_a) || !is_sub(placed_b)) return false;
  for (const auto& a : placed_a) {
    for (const auto& b : placed_b) {
      if (a.pos == b.pos) return false;
    }
  }
  for (const auto& a : placed_a) {
    for (const auto& b : placed_b) {
      if (manhattan(a.pos, b.pos) == 1) return true;
    }
  }
  return false;
}

}  // namespace mapcsim::oracle
