#include "mapcsim/event_log.hpp"

#include <sstream>

#include "json.hpp"

namespace mapcsim {

namespace {

using nlohmann::json;

json action_to_json(const Action& a) {
  json j;
  switch (a.kind) {
    case ActionKind::Move:
      j["type"] = "move";
      j["dir"] = std::string(1, dir_char(a.dir));
      break;
    case ActionKind::Rotate:
      j["type"] = "rotate";
      j["rot"] = a.rot == Rot::Cw ? "cw" : "ccw";
      break;
    case ActionKind::Attach:
      j["type"] = "attach";
      j["dir"] = std::string(1, dir_char(a.dir));
      break;
    case ActionKind::Detach:
      j["type"] = "detach";
      j["dir"] = std::string(1, dir_char(a.dir));
      break;
    case ActionKind::Connect:
      j["type"] = "connect";
      j["partner"] = a.partner;
      j["own"] = {a.own_block.x, a.own_block.y};
      j["theirs"] = {a.partner_block.x, a.partner_block.y};
      break;
    case ActionKind::Request:
      j["type"] = "request";
      j["dir"] = std::string(1, dir_char(a.dir));
      break;
    case ActionKind::Clear:
      j["type"] = "clear";
      j["target"] = {a.target.x, a.target.y};
      break;
    case ActionKind::Submit:
      j["type"] = "submit";
      j["task"] = a.task_name;
      break;
    case ActionKind::Skip:
      j["type"] = "skip";
      break;
  }
  return j;
}

json task_to_json(const Task& t) {
  json shape = json::array();
  for (const auto& e : t.shape.entries) {
    shape.push_back({{"x", e.pos.x}, {"y", e.pos.y}, {"type", e.type}});
  }
  return json{{"name", t.name}, {"reward", t.reward}, {"deadline", t.deadline}, {"shape", shape}};
}

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

}  // namespace

std::string render_world_event(const WorldEvent& ev,
                               const std::vector<std::string>& team_by_agent) {
  json j;
  j["step"] = ev.step;
  switch (ev.kind) {
    case WorldEvent::Kind::ActionResolved:
      j["kind"] = "action";
      j["agent"] = ev.agent;
      j["team"] = team_by_agent[static_cast<size_t>(ev.agent)];
      j["action"] = action_to_json(ev.action);
      j["result"] = outcome_str(ev.result.outcome);
      if (ev.result.outcome == ActionOutcome::Failed)
        j["reason"] = fail_reason_str(ev.result.reason);
      if (ev.blocked_by != BlockedBy::None) j["blocked_by"] = blocked_by_str(ev.blocked_by);
      break;
    case WorldEvent::Kind::TaskSpawned:
      j["kind"] = "task_spawn";
      j["task"] = task_to_json(ev.task);
      break;
    case WorldEvent::Kind::TaskExpired:
      j["kind"] = "task_expired";
      j["name"] = ev.task.name;
      break;
    case WorldEvent::Kind::Submitted:
      j["kind"] = "submit";
      j["agent"] = ev.agent;
      j["team"] = team_by_agent[static_cast<size_t>(ev.agent)];
      j["task"] = ev.task.name;
      j["reward"] = ev.task.reward;
      j["score"] = ev.new_score;
      break;
    case WorldEvent::Kind::ClearSpawned:
      j["kind"] = "clear_spawn";
      j["center"] = {ev.clear.center.x, ev.clear.center.y};
      j["radius"] = ev.clear.radius;
      j["detonation"] = ev.clear.detonation_step;
      break;
    case WorldEvent::Kind::Detonated:
      j["kind"] = "detonation";
      j["center"] = {ev.clear.center.x, ev.clear.center.y};
      j["radius"] = ev.clear.radius;
      j["blocks_destroyed"] = ev.blocks_destroyed;
      break;
  }
  return j.dump();
}

std::string render_trace_event(int step, const TraceEvent& ev) {
  json j;
  j["kind"] = ev.kind;
  j["step"] = step;
  for (const auto& [key, value] : ev.fields) {
    std::visit([&](const auto& v) { j[key] = v; }, value);
  }
  return j.dump();
}

std::string render_state_line(int step, std::uint64_t hash) {
  json j;
  j["kind"] = "state";
  j["step"] = step;
  j["hash"] = hex64(hash);
  return j.dump();
}

}  // namespace mapcsim
