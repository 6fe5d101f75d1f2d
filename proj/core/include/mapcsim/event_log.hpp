#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mapcsim/engine.hpp"
#include "mapcsim/world.hpp"

namespace mapcsim {

// JSON-lines records. Keys are emitted sorted, so identical runs produce
// byte-identical lines; replay verification depends on that.
std::string render_world_event(const WorldEvent& ev, const std::vector<std::string>& team_by_agent);
std::string render_trace_event(int step, const TraceEvent& ev);
std::string render_state_line(int step, std::uint64_t hash);

}  // namespace mapcsim
