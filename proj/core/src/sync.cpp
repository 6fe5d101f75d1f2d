#include "mapcsim/sync.hpp"

#include <algorithm>

namespace mapcsim {

SyncRegistry SyncRegistry::singletons(const std::vector<AgentId>& agents) {
  SyncRegistry reg;
  for (AgentId id : agents) {
    GroupMap m;
    m.group_id = id;  // founding agent's id doubles as the group id
    m.members[id] = {0, 0};
    reg.groups.emplace(id, std::move(m));
    reg.agent_to_group[id] = id;
  }
  return reg;
}

std::vector<UniquePair> find_unique_pairs(const std::vector<SightingReport>& reports,
                                          const std::map<AgentId, GroupId>& agent_to_group) {
  // Reporters per exact offset, team-wide. An offset seen by two observers is
  // ambiguous and produces no pair this step.
  std::map<Coord, std::vector<AgentId>> by_offset;
  for (const SightingReport& r : reports) by_offset[r.offset].push_back(r.observer);

  std::vector<UniquePair> out;
  for (const auto& [d, observers] : by_offset) {
    if (observers.size() != 1) continue;
    auto rev = by_offset.find(-d);
    if (rev == by_offset.end() || rev->second.size() != 1) continue;
    AgentId a = observers.front();
    AgentId b = rev->second.front();
    if (a == b) continue;
    if (a > b) continue;  // keep one orientation; (b,a,-d) is the same pair
    auto ga = agent_to_group.find(a);
    auto gb = agent_to_group.find(b);
    if (ga != agent_to_group.end() && gb != agent_to_group.end() && ga->second == gb->second)
      continue;
    out.push_back({a, b, d});
  }
  std::sort(out.begin(), out.end(), [](const UniquePair& x, const UniquePair& y) {
    if (x.a != y.a) return x.a < y.a;
    return x.b < y.b;
  });
  return out;
}

MergeRecord merge_groups(SyncRegistry& reg, AgentId a, AgentId b, const Coord& d) {
  GroupId ga = reg.agent_to_group.at(a);
  GroupId gb = reg.agent_to_group.at(b);

  // The mastergroup absorbs; otherwise A's group hosts.
  bool into_b = reg.master_group && *reg.master_group == gb;
  if (into_b) {
    std::swap(a, b);
    std::swap(ga, gb);
  }
  const Coord dir = into_b ? -d : d;

  const GroupMap& host = reg.groups.at(ga);
  const GroupMap& absorbed = reg.groups.at(gb);
  // Shift maps the absorbed frame into the host frame: B sits at posA + d.
  Coord shift = host.members.at(a) + dir - absorbed.members.at(b);

  GroupMap merged = merge_maps(host, absorbed, shift);
  MergeRecord rec;
  rec.a = a;
  rec.b = b;
  rec.shift = shift;
  rec.into = ga;
  rec.absorbed = gb;
  rec.group_size = static_cast<int>(merged.members.size());

  for (const auto& [id, _] : absorbed.members) reg.agent_to_group[id] = ga;
  reg.groups.erase(gb);
  reg.groups.at(ga) = std::move(merged);
  reg.total_merges += 1;
  return rec;
}

std::vector<MergeRecord> sync_step(SyncRegistry& reg,
                                   const std::map<AgentId, Percept>& percepts) {
  std::vector<SightingReport> reports;
  for (const auto& [id, p] : percepts) {
    for (const Thing& t : p.things) {
      if (t.kind == ThingKind::FriendEntity) reports.push_back({id, t.rel});
    }
  }

  std::vector<MergeRecord> records;
  for (const UniquePair& pair : find_unique_pairs(reports, reg.agent_to_group)) {
    if (reg.agent_to_group.at(pair.a) == reg.agent_to_group.at(pair.b)) continue;
    records.push_back(merge_groups(reg, pair.a, pair.b, pair.d));
  }
  return records;
}

}  // namespace mapcsim
