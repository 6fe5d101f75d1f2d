#pragma once

#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "mapcsim/budget.hpp"
#include "mapcsim/sync.hpp"
#include "mapcsim/world.hpp"

namespace mapcsim {

// Reasoning-trace event emitted by engines and serialized into the match log.
using TraceValue = std::variant<long long, double, std::string, bool>;

struct TraceEvent {
  std::string kind;
  std::vector<std::pair<std::string, TraceValue>> fields;  // serialized in order

  TraceEvent& with(std::string key, long long v) {
    fields.emplace_back(std::move(key), v);
    return *this;
  }
  TraceEvent& with(std::string key, int v) { return with(std::move(key), static_cast<long long>(v)); }
  TraceEvent& with(std::string key, std::string v) {
    fields.emplace_back(std::move(key), std::move(v));
    return *this;
  }
  TraceEvent& with(std::string key, bool v) {
    fields.emplace_back(std::move(key), v);
    return *this;
  }
};

class EventSink {
 public:
  explicit EventSink(int verbosity = 1) : verbosity_(verbosity) {}
  int verbosity() const { return verbosity_; }
  void emit(TraceEvent ev) { events_.push_back(std::move(ev)); }
  std::vector<TraceEvent> drain() { return std::exchange(events_, {}); }

 private:
  int verbosity_;
  std::vector<TraceEvent> events_;
};

// What an agent knows about its own body, derived afresh from each percept.
struct BodyState {
  AgentId id = -1;
  int energy = 0;
  std::vector<std::pair<Coord, BlockType>> carried;  // blocks in own component, rel self
  std::vector<Coord> component_offsets;              // all attached things, rel self
  bool connected_to_agent = false;
};

BodyState derive_body(const Percept& percept);

struct TeamContext {
  std::string team;
  std::vector<AgentId> agents;
  SimRules rules;
  std::uint64_t seed = 0;
};

class TeamEngine {
 public:
  virtual ~TeamEngine() = default;
  virtual std::map<AgentId, Action> step(const std::map<AgentId, Percept>& percepts,
                                         StepBudget& budget, EventSink& sink) = 0;
  // Group bookkeeping for engines that synchronize; null otherwise.
  virtual const SyncRegistry* registry() const { return nullptr; }
};

// Seeded drunkard's walk; the scoring floor every real engine must beat.
std::unique_ptr<TeamEngine> make_random_baseline(const TeamContext& ctx);

}  // namespace mapcsim
