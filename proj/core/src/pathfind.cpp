#include "mapcsim/pathfind.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <queue>

namespace mapcsim {

std::vector<Coord> Footprint::at(int orient) const {
  std::vector<Coord> out;
  out.reserve(offsets.size());
  for (const Coord& c : offsets) out.push_back(rotate_cw(c, orient));
  std::sort(out.begin(), out.end());
  return out;
}

bool Footprint::rotation_symmetric() const {
  return at(0) == at(1);
}

namespace {

struct State {
  Coord c;
  int o = 0;
  friend bool operator<(const State& a, const State& b) {
    if (!(a.c == b.c)) return a.c < b.c;
    return a.o < b.o;
  }
  friend bool operator==(const State&, const State&) = default;
};

struct Bounds {
  int min_x, min_y, max_x, max_y;
  bool contains(const Coord& c) const {
    return c.x >= min_x && c.x <= max_x && c.y >= min_y && c.y <= max_y;
  }
};

Bounds search_bounds(const GroupMap& map, const Coord& start,
                     const std::vector<Coord>& extra, int margin) {
  Bounds b{start.x, start.y, start.x, start.y};
  auto grow = [&](const Coord& c) {
    b.min_x = std::min(b.min_x, c.x);
    b.min_y = std::min(b.min_y, c.y);
    b.max_x = std::max(b.max_x, c.x);
    b.max_y = std::max(b.max_y, c.y);
  };
  for (const auto& [pos, _] : map.knowledge) grow(pos);
  for (const Coord& c : extra) grow(c);
  b.min_x -= margin;
  b.min_y -= margin;
  b.max_x += margin;
  b.max_y += margin;
  return b;
}

bool cell_passable(const GroupMap& map, const Coord& c, const std::set<Coord>& ignore, int now) {
  if (ignore.count(c)) return true;
  if (map.move_blocked(c, now)) return false;
  auto it = map.knowledge.find(c);
  if (it == map.knowledge.end()) return true;  // unknown is traversable
  const CellBelief& cell = it->second;
  if (cell.terrain == TerrainBelief::Obstacle) return false;
  if (cell.block && now - cell.block_seen <= map.stale_ttl) return false;
  if (cell.foe_seen >= 0 && now - cell.foe_seen <= map.stale_ttl) return false;
  return true;
}

bool placement_legal(const GroupMap& map, const Bounds& bounds, const Footprint& fp,
                     const State& s, const std::set<Coord>& ignore, int now) {
  for (const Coord& off : fp.at(s.o)) {
    Coord c = s.c + off;
    if (!bounds.contains(c)) return false;
    if (!cell_passable(map, c, ignore, now)) return false;
  }
  return true;
}

std::vector<Action> reconstruct(const std::map<State, std::pair<State, Action>>& parent,
                                State s, const State& start) {
  std::vector<Action> actions;
  while (!(s == start)) {
    const auto& [prev, act] = parent.at(s);
    actions.push_back(act);
    s = prev;
  }
  std::reverse(actions.begin(), actions.end());
  return actions;
}

}  // namespace

PathResult a_star(const GroupMap& map, const PathQuery& q) {
  PathResult res;
  const Bounds bounds = search_bounds(map, q.start, q.goal_cells, 2);
  const bool rotate_moves = !q.footprint.rotation_symmetric();

  auto heuristic = [&](const Coord& c) {
    if (q.goal_cells.empty()) return 0;
    int best = std::numeric_limits<int>::max();
    for (const Coord& g : q.goal_cells) best = std::min(best, manhattan(c, g));
    return best;
  };
  auto is_goal = [&](const State& s) {
    if (q.is_goal) return q.is_goal(s.c, s.o);
    for (const Coord& g : q.goal_cells)
      if (s.c == g) return true;
    return false;
  };

  const State start{q.start, q.start_orient & 3};
  // Entries ordered by (f, h, state) so expansion order is fully determined.
  using Entry = std::tuple<int, int, State>;
  auto cmp = [](const Entry& a, const Entry& b) { return b < a; };
  std::priority_queue<Entry, std::vector<Entry>, decltype(cmp)> open(cmp);
  std::map<State, int> g_of;
  std::map<State, std::pair<State, Action>> parent;

  g_of[start] = 0;
  open.push({heuristic(start.c), heuristic(start.c), start});

  while (!open.empty()) {
    if (res.iterations >= q.max_iterations) {
      res.outcome = PathOutcome::CapExceeded;
      return res;
    }
    auto [f, h, s] = open.top();
    open.pop();
    const int g = f - h;
    auto git = g_of.find(s);
    if (git == g_of.end() || git->second < g) continue;  // stale entry
    res.iterations += 1;

    if (is_goal(s)) {
      res.outcome = PathOutcome::Path;
      res.actions = reconstruct(parent, s, start);
      res.cost = g;
      return res;
    }

    for (Dir d : kAllDirs) {
      State next{s.c + offset(d), s.o};
      if (!placement_legal(map, bounds, q.footprint, next, q.ignore_cells, q.now)) continue;
      const bool unknown = !map.known(next.c);
      const int step_cost = unknown ? 2 : 1;
      int ng = g + step_cost;
      auto it = g_of.find(next);
      if (it != g_of.end() && it->second <= ng) continue;
      g_of[next] = ng;
      parent[next] = {s, Action::move(d)};
      open.push({ng + heuristic(next.c), heuristic(next.c), next});
    }
    if (rotate_moves) {
      for (Rot r : {Rot::Cw, Rot::Ccw}) {
        State next{s.c, (s.o + (r == Rot::Cw ? 1 : 3)) & 3};
        if (!placement_legal(map, bounds, q.footprint, next, q.ignore_cells, q.now)) continue;
        int ng = g + 1;
        auto it = g_of.find(next);
        if (it != g_of.end() && it->second <= ng) continue;
        g_of[next] = ng;
        parent[next] = {s, Action::rotate(r)};
        open.push({ng + heuristic(next.c), heuristic(next.c), next});
      }
    }
  }
  res.outcome = PathOutcome::Exhausted;
  return res;
}

PathResult escape_path(const GroupMap& map, const Coord& start, const Footprint& footprint,
                       const std::set<Coord>& danger_cells, const std::set<Coord>& ignore_cells,
                       int now) {
  PathResult res;
  std::vector<Coord> extra(danger_cells.begin(), danger_cells.end());
  const Bounds bounds = search_bounds(map, start, extra, 2);
  const bool rotate_moves = !footprint.rotation_symmetric();

  auto safe = [&](const State& s) {
    for (const Coord& off : footprint.at(s.o)) {
      if (danger_cells.count(s.c + off)) return false;
    }
    return true;
  };

  const State start_state{start, 0};
  std::map<State, std::pair<State, Action>> parent;
  std::set<State> seen{start_state};
  std::deque<State> queue{start_state};

  while (!queue.empty()) {
    State s = queue.front();
    queue.pop_front();
    res.iterations += 1;

    if (safe(s)) {
      res.outcome = PathOutcome::Path;
      res.actions = reconstruct(parent, s, start_state);
      res.cost = res.length();
      return res;
    }

    auto push = [&](const State& next, const Action& act) {
      if (seen.count(next)) return;
      if (!placement_legal(map, bounds, footprint, next, ignore_cells, now)) return;
      seen.insert(next);
      parent[next] = {s, act};
      queue.push_back(next);
    };
    for (Dir d : kAllDirs) push({s.c + offset(d), s.o}, Action::move(d));
    if (rotate_moves) {
      push({s.c, (s.o + 1) & 3}, Action::rotate(Rot::Cw));
      push({s.c, (s.o + 3) & 3}, Action::rotate(Rot::Ccw));
    }
  }
  res.outcome = PathOutcome::Exhausted;
  return res;
}

}  // namespace mapcsim
