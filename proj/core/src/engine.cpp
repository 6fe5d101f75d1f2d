#include "mapcsim/engine.hpp"

namespace mapcsim {

BodyState derive_body(const Percept& percept) {
  BodyState body;
  body.id = percept.self;
  body.energy = percept.energy;
  body.component_offsets = percept.attached_offsets;
  for (const Coord& off : percept.attached_offsets) {
    for (const Thing& t : percept.things) {
      if (!(t.rel == off)) continue;
      if (t.kind == ThingKind::Block) body.carried.emplace_back(off, t.block_type);
      if (t.kind == ThingKind::FriendEntity) body.connected_to_agent = true;
    }
  }
  return body;
}

namespace {

class RandomBaseline final : public TeamEngine {
 public:
  explicit RandomBaseline(const TeamContext& ctx) : rng_(ctx.seed) {}

  std::map<AgentId, Action> step(const std::map<AgentId, Percept>& percepts, StepBudget&,
                                 EventSink&) override {
    std::map<AgentId, Action> out;
    for (const auto& [id, p] : percepts) {
      (void)p;
      std::uint32_t roll = rng_.bounded(10);
      if (roll < 8) {
        out[id] = Action::move(kAllDirs[rng_.bounded(4)]);
      } else {
        out[id] = Action::skip();
      }
    }
    return out;
  }

 private:
  Rng rng_;
};

}  // namespace

std::unique_ptr<TeamEngine> make_random_baseline(const TeamContext& ctx) {
  return std::make_unique<RandomBaseline>(ctx);
}

}  // namespace mapcsim
