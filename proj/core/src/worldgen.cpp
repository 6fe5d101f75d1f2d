#include "mapcsim/worldgen.hpp"

#include <algorithm>
#include <deque>
#include <set>

namespace mapcsim {

namespace {

// Deterministic Fisher-Yates on our own stream.
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (size_t i = v.size(); i > 1; --i) {
    size_t j = rng.bounded(static_cast<std::uint32_t>(i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace

WorldState generate_world(const WorldGenConfig& cfg, const std::vector<TeamSpec>& teams,
                          std::uint64_t seed) {
  Rng gen_rng(seed);
  WorldState w = make_world(cfg.width, cfg.height, cfg.rules);
  w.gen = cfg.gen;
  w.obstacle_regrowth = cfg.obstacle_regrowth;
  if (w.gen.block_types.empty()) w.gen.block_types = cfg.dispenser_types;

  // Scatter, then one smoothing pass that drops fully isolated specks so the
  // map reads as terrain rather than noise.
  std::vector<bool> scatter(w.cells.size(), false);
  for (int y = 0; y < cfg.height; ++y) {
    for (int x = 0; x < cfg.width; ++x) {
      scatter[y * cfg.width + x] = gen_rng.chance(cfg.obstacle_density);
    }
  }
  for (int y = 0; y < cfg.height; ++y) {
    for (int x = 0; x < cfg.width; ++x) {
      if (!scatter[y * cfg.width + x]) continue;
      int neighbors = 0;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          int nx = x + dx, ny = y + dy;
          if (nx < 0 || ny < 0 || nx >= cfg.width || ny >= cfg.height) continue;
          if (scatter[ny * cfg.width + nx]) ++neighbors;
        }
      }
      if (neighbors >= 1) w.cell({x, y}).kind = CellKind::Obstacle;
    }
  }

  auto free_cells = [&]() {
    std::vector<Coord> out;
    for (int y = 0; y < cfg.height; ++y) {
      for (int x = 0; x < cfg.width; ++x) {
        if (w.cell({x, y}).kind == CellKind::Free) out.push_back({x, y});
      }
    }
    return out;
  };

  // Goal clusters grown breadth-first from random free seeds.
  for (int g = 0; g < cfg.goal_clusters; ++g) {
    auto candidates = free_cells();
    if (candidates.empty()) break;
    Coord seed_cell = candidates[gen_rng.bounded(static_cast<std::uint32_t>(candidates.size()))];
    std::deque<Coord> queue{seed_cell};
    std::set<Coord> taken;
    while (!queue.empty() && static_cast<int>(taken.size()) < cfg.goal_cluster_size) {
      Coord c = queue.front();
      queue.pop_front();
      if (taken.count(c)) continue;
      if (!w.in_bounds(c) || w.cell(c).kind != CellKind::Free) continue;
      taken.insert(c);
      w.cell(c).kind = CellKind::Goal;
      for (const Coord& d : neighbor_offsets()) queue.push_back(c + d);
    }
  }

  for (const BlockType& type : cfg.dispenser_types) {
    auto candidates = free_cells();
    shuffle(candidates, gen_rng);
    int placed = 0;
    for (const Coord& c : candidates) {
      if (placed >= cfg.dispensers_per_type) break;
      w.cell(c).kind = CellKind::Dispenser;
      w.cell(c).dispenser_type = type;
      ++placed;
    }
  }

  // Agent spawns: free cells, min spacing when it can be met.
  auto candidates = free_cells();
  shuffle(candidates, gen_rng);
  std::vector<Coord> spawns;
  int wanted = 0;
  for (const TeamSpec& t : teams) wanted += t.agent_count;
  for (int spacing = cfg.agent_min_spacing; spacing >= 0 && static_cast<int>(spawns.size()) < wanted;
       --spacing) {
    spawns.clear();
    for (const Coord& c : candidates) {
      if (static_cast<int>(spawns.size()) >= wanted) break;
      bool ok = true;
      for (const Coord& s : spawns) {
        if (manhattan(c, s) < spacing) {
          ok = false;
          break;
        }
      }
      if (ok) spawns.push_back(c);
    }
  }

  size_t next = 0;
  for (const TeamSpec& t : teams) {
    for (int i = 0; i < t.agent_count && next < spawns.size(); ++i) {
      add_agent(w, t.name, spawns[next++]);
    }
  }

  // The runtime stream is forked so that layout size does not perturb it.
  w.rng = gen_rng.fork(0x5eed);
  return w;
}

}  // namespace mapcsim
