#include "doctest.h"

#include <set>

#include "mapcsim/reservation.hpp"
#include "mapcsim/world.hpp"

using namespace mapcsim;

namespace {

std::vector<Coord> cells_of(const WorldState& w, AgentId id) {
  std::vector<Coord> out{w.agents[id].pos};
  for (const auto& [off, type] : carried_blocks(w, id)) {
    (void)type;
    out.push_back(w.agents[id].pos + off);
  }
  return out;
}

void preclaim_all(ReservationMap& res, const WorldState& w) {
  for (const auto& ag : w.agents) claim_footprint(res, ag.id, cells_of(w, ag.id));
}

}  // namespace

TEST_SUITE("reservation") {

TEST_CASE("independent request and move both approved") {
  // Agent 7 reserves a block request below itself, agent 3 a step east;
  // disjoint needs, both go through.
  ReservationMap res;
  reset_reservations(res, 1);
  claim_footprint(res, 7, {{5, 5}});
  claim_footprint(res, 3, {{1, 1}});
  auto r7 = reserve_action(res, 7, Action::request(Dir::South), {{5, 5}});
  CHECK(r7.approved);
  auto r3 = reserve_action(res, 3, Action::move(Dir::East), {{1, 1}});
  CHECK(r3.approved);
  CHECK(res.cell_claims.at({5, 6}) == 7);
  CHECK(res.cell_claims.at({2, 1}) == 3);
  CHECK(res.resource_claims.count("dispenser@(5,6)"));
}

TEST_CASE("second move into a contested cell is rejected") {
  ReservationMap res;
  reset_reservations(res, 0);
  claim_footprint(res, 0, {{3, 3}});
  claim_footprint(res, 1, {{5, 3}});
  CHECK(reserve_action(res, 0, Action::move(Dir::East), {{3, 3}}).approved);
  auto r = reserve_action(res, 1, Action::move(Dir::West), {{5, 3}});
  CHECK_FALSE(r.approved);
  CHECK(r.conflicting == 0);
}

TEST_CASE("moving into a vacating cell is rejected either way") {
  // B moves away while A moves into B's current cell. B's stay-put outcome is
  // claimed up front, so A is rejected no matter the proposal order.
  for (bool a_first : {true, false}) {
    ReservationMap res;
    reset_reservations(res, 0);
    claim_footprint(res, 0, {{2, 2}});
    claim_footprint(res, 1, {{3, 2}});
    ReserveOutcome ra, rb;
    if (a_first) {
      ra = reserve_action(res, 0, Action::move(Dir::East), {{2, 2}});
      rb = reserve_action(res, 1, Action::move(Dir::East), {{3, 2}});
    } else {
      rb = reserve_action(res, 1, Action::move(Dir::East), {{3, 2}});
      ra = reserve_action(res, 0, Action::move(Dir::East), {{2, 2}});
    }
    CHECK_FALSE(ra.approved);
    CHECK(ra.conflicting == 1);
    CHECK(rb.approved);
  }
}

TEST_CASE("reset empties claims and repeats are idempotent") {
  ReservationMap res;
  reset_reservations(res, 0);
  claim_footprint(res, 0, {{1, 1}});
  CHECK(reserve_action(res, 0, Action::move(Dir::East), {{1, 1}}).approved);
  CHECK_FALSE(res.cell_claims.empty());

  reset_reservations(res, 1);
  CHECK(res.cell_claims.empty());
  CHECK(res.resource_claims.empty());
  CHECK(res.step == 1);
  // Previously conflicting action approves after the reset.
  CHECK(reserve_action(res, 1, Action::move(Dir::West), {{3, 1}}).approved);
  reset_reservations(res, 2);
  reset_reservations(res, 2);
  CHECK(res.cell_claims.empty());
  CHECK(res.step == 2);
}

TEST_CASE("one dispenser spawn cell approves at most once per step") {
  ReservationMap res;
  reset_reservations(res, 0);
  claim_footprint(res, 0, {{4, 3}});
  claim_footprint(res, 1, {{6, 3}});
  // Both stand beside the dispenser at (5,3) and want a block from it.
  CHECK(reserve_action(res, 0, Action::request(Dir::East), {{4, 3}}).approved);
  auto r = reserve_action(res, 1, Action::request(Dir::West), {{6, 3}});
  CHECK_FALSE(r.approved);
  CHECK(r.conflicting == 0);
}

TEST_CASE("mutual connect shares the pairing resource, third parties do not") {
  ReservationMap res;
  reset_reservations(res, 0);
  claim_footprint(res, 0, {{2, 2}, {3, 2}});
  claim_footprint(res, 1, {{5, 2}, {4, 2}});
  claim_footprint(res, 2, {{7, 2}, {6, 2}});
  CHECK(reserve_action(res, 0, Action::connect(1, {1, 0}, {-1, 0}), {{2, 2}, {3, 2}}).approved);
  CHECK(reserve_action(res, 1, Action::connect(0, {-1, 0}, {1, 0}), {{5, 2}, {4, 2}}).approved);
  // A third agent trying to pair with agent 1 uses a different key and is not
  // blocked by the resource, only by cells; with disjoint cells it may pass.
  CHECK(reserve_action(res, 2, Action::connect(1, {-1, 0}, {1, 0}), {{7, 2}, {6, 2}}).approved);
}

TEST_CASE("randomized proposals stay collision-free under any outcome mix") {
  // Safety oracle: claims must cover every reachable placement, so simulating
  // all success outcomes and any subset of failures puts no two agents or
  // carried blocks on one cell.
  Rng rng(2024);
  for (int round = 0; round < 300; ++round) {
    WorldState w = make_world(9, 9);
    int n = 3 + static_cast<int>(rng.bounded(2));
    for (int i = 0; i < n; ++i) {
      Coord pos;
      do {
        pos = {static_cast<int>(rng.bounded(9)), static_cast<int>(rng.bounded(9))};
      } while (w.agent_at(pos) || w.block_at_pos(pos));
      AgentId id = add_agent(w, "A", pos);
      if (rng.chance(0.5)) {
        for (const Coord& d : neighbor_offsets()) {
          Coord bp = pos + d;
          if (w.in_bounds(bp) && !w.agent_at(bp) && !w.block_at_pos(bp)) {
            BlockId b = add_block(w, bp, "b0");
            add_attachment(w, EntKey::agent(id), EntKey::block(b));
            break;
          }
        }
      }
    }

    ReservationMap res;
    reset_reservations(res, 0);
    preclaim_all(res, w);

    struct Approved {
      AgentId id;
      Action action;
    };
    std::vector<Approved> approved;
    for (const auto& ag : w.agents) {
      Action act;
      switch (rng.bounded(3)) {
        case 0: act = Action::move(kAllDirs[rng.bounded(4)]); break;
        case 1: act = Action::rotate(rng.bounded(2) ? Rot::Cw : Rot::Ccw); break;
        default: act = Action::request(kAllDirs[rng.bounded(4)]); break;
      }
      if (reserve_action(res, ag.id, act, cells_of(w, ag.id)).approved) {
        approved.push_back({ag.id, act});
      }
    }

    // Enumerate every success/failure mix of the approved actions; the cells
    // any two agents could end up holding must stay disjoint.
    for (std::uint32_t mix = 0; mix < (1u << approved.size()); ++mix) {
      std::map<Coord, int> occupancy;
      for (const auto& ag : w.agents) {
        int idx = -1;
        for (size_t i = 0; i < approved.size(); ++i) {
          if (approved[i].id == ag.id) idx = static_cast<int>(i);
        }
        bool succeeds = idx >= 0 && (mix >> idx) & 1;
        auto body = cells_of(w, ag.id);
        std::set<Coord> mine;
        if (!succeeds) {
          mine.insert(body.begin(), body.end());
        } else {
          const Action& act = approved[static_cast<size_t>(idx)].action;
          switch (act.kind) {
            case ActionKind::Move:
              for (const Coord& c : body) mine.insert(c + offset(act.dir));
              break;
            case ActionKind::Rotate: {
              Coord pivot = w.agents[ag.id].pos;
              for (const Coord& c : body) mine.insert(pivot + rotate(c - pivot, act.rot));
              break;
            }
            case ActionKind::Request:
              mine.insert(body.begin(), body.end());
              mine.insert(w.agents[ag.id].pos + offset(act.dir));
              break;
            default:
              mine.insert(body.begin(), body.end());
              break;
          }
        }
        for (const Coord& c : mine) occupancy[c] += 1;
      }
      for (const auto& [cell, count] : occupancy) {
        (void)cell;
        CHECK(count <= 1);
      }
    }

    // The world agrees: stepping the approved actions produces no overlap.
    std::map<AgentId, Action> acts;
    for (const auto& ap : approved) acts[ap.id] = ap.action;
    step_world(w, acts);
    auto violations = check_world_invariants(w);
    for (const auto& v : violations) FAIL_CHECK(v);
  }
}

}
