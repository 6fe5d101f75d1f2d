#include "doctest.h"

#include "mapcsim/beliefs.hpp"
#include "mapcsim/sync.hpp"
#include "mapcsim/world.hpp"

using namespace mapcsim;

namespace {

GroupMap one_member_map(AgentId id, Coord frame_pos) {
  GroupMap m;
  m.group_id = id;
  m.members[id] = frame_pos;
  return m;
}

Percept percept_with(int step, std::vector<Thing> things, int radius = 5) {
  Percept p;
  p.step = step;
  p.vision_radius = radius;
  p.things = std::move(things);
  return p;
}

}  // namespace

TEST_SUITE("beliefs") {

TEST_CASE("percept things land at member position plus offset") {
  GroupMap m = one_member_map(0, {4, 4});
  Percept p = percept_with(3, {{{0, 2}, ThingKind::Dispenser, "b0", -1}});
  integrate_percept(m, 0, p);
  auto it = m.knowledge.find({4, 6});
  REQUIRE(it != m.knowledge.end());
  CHECK(it->second.terrain == TerrainBelief::Dispenser);
  CHECK(it->second.dispenser_type == "b0");
  CHECK(it->second.last_seen == 3);
}

TEST_CASE("unreported in-radius cells become free") {
  GroupMap m = one_member_map(0, {0, 0});
  // First sight an obstacle east, then observe the same area without it.
  integrate_percept(m, 0, percept_with(1, {{{2, 0}, ThingKind::Obstacle, "", -1}}));
  CHECK(m.knowledge.at({2, 0}).terrain == TerrainBelief::Obstacle);
  integrate_percept(m, 0, percept_with(2, {}));
  CHECK(m.knowledge.at({2, 0}).terrain == TerrainBelief::Free);
  CHECK(m.knowledge.at({2, 0}).last_seen == 2);
}

TEST_CASE("things outside the radius leave knowledge untouched") {
  GroupMap m = one_member_map(0, {0, 0});
  integrate_percept(m, 0, percept_with(1, {}, 2));
  CHECK_FALSE(m.known({3, 0}));
  CHECK(m.known({2, 0}));
}

TEST_CASE("integrating the same percept twice is idempotent") {
  GroupMap m = one_member_map(0, {1, 1});
  Percept p = percept_with(4, {{{1, 0}, ThingKind::Obstacle, "", -1},
                               {{0, 1}, ThingKind::Block, "b1", -1},
                               {{-1, 0}, ThingKind::FoeEntity, "", -1}});
  integrate_percept(m, 0, p);
  GroupMap once = m;
  integrate_percept(m, 0, p);
  CHECK(once.knowledge.size() == m.knowledge.size());
  for (const auto& [pos, cell] : once.knowledge) {
    const CellBelief& again = m.knowledge.at(pos);
    CHECK(cell.terrain == again.terrain);
    CHECK(cell.last_seen == again.last_seen);
    CHECK(cell.block == again.block);
    CHECK(cell.foe_seen == again.foe_seen);
  }
}

TEST_CASE("confirmed moves update the member position") {
  GroupMap m = one_member_map(7, {4, 4});
  track_own_action(m, 7, Action::move(Dir::East), ActionResult::success());
  CHECK(m.members.at(7) == Coord{5, 4});
  track_own_action(m, 7, Action::move(Dir::East), ActionResult::failure(FailReason::PathBlocked));
  CHECK(m.members.at(7) == Coord{5, 4});
  // Non-move actions never move the member.
  track_own_action(m, 7, Action::rotate(Rot::Cw), ActionResult::success());
  CHECK(m.members.at(7) == Coord{5, 4});
}

TEST_CASE("drag bookkeeping corrects a towed member") {
  // Ground truth: west agent drags the east one a cell west.
  WorldState w = make_world(10, 10);
  AgentId west = add_agent(w, "A", {3, 4});
  AgentId east = add_agent(w, "A", {6, 4});
  BlockId b1 = add_block(w, {4, 4}, "b0");
  BlockId b2 = add_block(w, {5, 4}, "b0");
  add_attachment(w, EntKey::agent(west), EntKey::block(b1));
  add_attachment(w, EntKey::block(b1), EntKey::block(b2));
  add_attachment(w, EntKey::agent(east), EntKey::block(b2));

  GroupMap m;
  m.group_id = 0;
  m.members[west] = w.agents[west].pos;
  m.members[east] = w.agents[east].pos;

  REQUIRE(move_component(w, west, Dir::West) == ActionResult::success());
  track_own_action(m, west, Action::move(Dir::West), ActionResult::success());
  apply_drag(m, east, offset(Dir::West));

  CHECK(m.members.at(west) == w.agents[west].pos);
  CHECK(m.members.at(east) == w.agents[east].pos);
}

TEST_CASE("merge of disjoint knowledge is a union") {
  GroupMap a = one_member_map(0, {0, 0});
  GroupMap b = one_member_map(1, {0, 0});
  integrate_percept(a, 0, percept_with(1, {}, 1));
  integrate_percept(b, 1, percept_with(1, {}, 1));
  size_t na = a.knowledge.size(), nb = b.knowledge.size();
  GroupMap merged = merge_maps(a, b, {100, 100});
  CHECK(merged.knowledge.size() == na + nb);
  CHECK(merged.group_id == a.group_id);
  CHECK(merged.members.at(1) == Coord{100, 100});
}

TEST_CASE("merge conflicts resolve to the newer observation") {
  GroupMap a = one_member_map(0, {0, 0});
  GroupMap b = one_member_map(1, {0, 0});
  a.knowledge[{5, 5}] = {TerrainBelief::Free, "", std::nullopt, 10, -1, -1};
  b.knowledge[{5, 5}] = {TerrainBelief::Obstacle, "", std::nullopt, 20, -1, -1};
  GroupMap newer_wins = merge_maps(a, b, {0, 0});
  CHECK(newer_wins.knowledge.at({5, 5}).terrain == TerrainBelief::Obstacle);

  b.knowledge[{5, 5}].last_seen = 5;
  GroupMap older_loses = merge_maps(a, b, {0, 0});
  CHECK(older_loses.knowledge.at({5, 5}).terrain == TerrainBelief::Free);
}

TEST_CASE("identity merge of identical maps changes nothing") {
  GroupMap a = one_member_map(0, {2, 3});
  integrate_percept(a, 0, percept_with(1, {{{1, 0}, ThingKind::Goal, "", -1}}, 2));
  GroupMap merged = merge_maps(a, a, {0, 0});
  CHECK(merged.knowledge.size() == a.knowledge.size());
  for (const auto& [pos, cell] : a.knowledge) {
    CHECK(merged.knowledge.at(pos).terrain == cell.terrain);
    CHECK(merged.knowledge.at(pos).last_seen == cell.last_seen);
  }
}

TEST_CASE("merged member offsets agree with the simulator ground truth") {
  WorldState w = make_world(20, 20);
  AgentId a0 = add_agent(w, "A", {4, 4});
  AgentId a1 = add_agent(w, "A", {10, 7});
  GroupMap ma = one_member_map(a0, {0, 0});
  GroupMap mb = one_member_map(a1, {0, 0});
  integrate_percept(ma, a0, gen_percept(w, a0));
  integrate_percept(mb, a1, gen_percept(w, a1));

  // The true shift between frames is the world-position difference.
  Coord shift = w.agents[a1].pos - w.agents[a0].pos;
  GroupMap merged = merge_maps(ma, mb, shift);
  Coord frame_diff = merged.members.at(a1) - merged.members.at(a0);
  Coord world_diff = w.agents[a1].pos - w.agents[a0].pos;
  CHECK(frame_diff == world_diff);
}

TEST_CASE("frontier targets are unknown-adjacent while unknowns exist") {
  GroupMap m = one_member_map(0, {0, 0});
  integrate_percept(m, 0, percept_with(1, {}, 3));
  auto targets = frontier_targets(m, 2);
  REQUIRE_FALSE(targets.empty());
  CHECK(targets.size() <= 2);
  if (targets.size() == 2) CHECK_FALSE(targets[0] == targets[1]);
  for (const Coord& t : targets) {
    bool adj_unknown = false;
    for (const Coord& d : neighbor_offsets()) {
      if (!m.known(t + d)) adj_unknown = true;
    }
    CHECK(adj_unknown);
  }
}

TEST_CASE("single known cell is its own frontier") {
  GroupMap m;
  m.group_id = 0;
  m.members[0] = {0, 0};
  m.knowledge[{0, 0}] = {TerrainBelief::Free, "", std::nullopt, 7, -1, -1};
  auto targets = frontier_targets(m, 1);
  REQUIRE(targets.size() == 1);
  CHECK(targets[0] == Coord{0, 0});
}

TEST_CASE("uniformly fresh closed map yields no targets") {
  GroupMap m;
  m.group_id = 0;
  m.members[0] = {0, 0};
  // Interior free cells walled in by obstacle beliefs; obstacles never count
  // as frontier, and all stamps are equal.
  for (int y = -2; y <= 2; ++y) {
    for (int x = -2; x <= 2; ++x) {
      bool border = std::abs(x) == 2 || std::abs(y) == 2;
      m.knowledge[{x, y}] = {border ? TerrainBelief::Obstacle : TerrainBelief::Free, "",
                             std::nullopt, 9, -1, -1};
    }
  }
  CHECK(frontier_targets(m, 3).empty());

  // Aging one interior cell switches to the longest-unseen branch.
  m.knowledge.at({0, 0}).last_seen = 2;
  auto targets = frontier_targets(m, 1);
  REQUIRE(targets.size() == 1);
  CHECK(targets[0] == Coord{0, 0});
}

TEST_CASE("map dump uses the documented glyphs") {
  GroupMap m;
  m.group_id = 0;
  m.knowledge[{0, 0}] = {TerrainBelief::Free, "", std::nullopt, 1, -1, -1};
  m.knowledge[{1, 0}] = {TerrainBelief::Obstacle, "", std::nullopt, 1, -1, -1};
  m.knowledge[{3, 0}] = {TerrainBelief::Dispenser, "b0", std::nullopt, 1, -1, -1};
  m.knowledge[{0, 1}] = {TerrainBelief::Goal, "", std::nullopt, 1, -1, -1};
  std::string dump = dump_map(m);
  CHECK(dump == ".#?d\ng???\n");
}

}
