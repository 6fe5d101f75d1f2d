#pragma once

// Test-only oracles, kept independent of the implementation paths they check.

#include <optional>
#include <set>
#include <vector>

#include "mapcsim/beliefs.hpp"
#include "mapcsim/world.hpp"

namespace mapcsim::oracle {

// Plain breadth-first shortest path over known-free cells of a belief map,
// single-cell footprint. Reference for the bounded A*.
std::optional<int> bfs_shortest(const GroupMap& map, const Coord& start, const Coord& goal);

// Recomputes the submit post-condition from raw world state.
bool submit_should_succeed(const WorldState& world, AgentId agent, const std::string& task_name);

// All task shapes of `size` entries (exact sets, no symmetry folding).
std::vector<TaskShape> enumerate_shapes(int size, const BlockType& type);

// Same shapes folded by rotation around the origin.
int count_rotation_classes(const std::vector<TaskShape>& shapes);

// Brute-force validity check of one candidate pair placement: both parts are
// sub-shapes of the task, non-overlapping, and mutually 4-adjacent.
bool valid_pair_placement(const TaskShape& task, const std::vector<TaskShapeEntry>& placed_a,
                          const std::vector<TaskShapeEntry>& placed_b);

}  // namespace mapcsim::oracle
