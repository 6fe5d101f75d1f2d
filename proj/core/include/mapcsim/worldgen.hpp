#pragma once

#include <string>
#include <vector>

#include "mapcsim/world.hpp"

namespace mapcsim {

struct WorldGenConfig {
  int width = 40;
  int height = 40;
  double obstacle_density = 0.15;
  std::vector<BlockType> dispenser_types = {"b0"};
  int dispensers_per_type = 2;
  int goal_clusters = 1;
  int goal_cluster_size = 6;
  SimRules rules;
  GenRules gen;
  bool obstacle_regrowth = false;
  int agent_min_spacing = 3;
};

struct TeamSpec {
  std::string name;
  int agent_count = 0;
};

// Seeded map generation: obstacle scatter with one smoothing pass, goal
// clusters grown from seed cells, dispensers and agents on free cells.
WorldState generate_world(const WorldGenConfig& cfg, const std::vector<TeamSpec>& teams,
                          std::uint64_t seed);

}  // namespace mapcsim
