#pragma once

#include <map>
#include <optional>
#include <vector>

#include "mapcsim/beliefs.hpp"

namespace mapcsim {

// One agent's friendly sighting this step: observer saw a friendly entity at
// `offset` (never (0,0)).
struct SightingReport {
  AgentId observer = -1;
  Coord offset;
  friend bool operator<(const SightingReport& a, const SightingReport& b) {
    if (a.observer != b.observer) return a.observer < b.observer;
    return a.offset < b.offset;
  }
  friend bool operator==(const SightingReport&, const SightingReport&) = default;
};

struct UniquePair {
  AgentId a = -1;
  AgentId b = -1;
  Coord d;  // offset from a to b
  friend bool operator==(const UniquePair&, const UniquePair&) = default;
};

struct MergeRecord {
  AgentId a = -1;
  AgentId b = -1;
  Coord shift;
  GroupId into = -1;
  GroupId absorbed = -1;
  int group_size = 0;
};

// Group registry for one team. Starts as one singleton group per agent and
// only ever shrinks; the mastergroup, once set, absorbs every later merge.
struct SyncRegistry {
  std::map<GroupId, GroupMap> groups;
  std::map<AgentId, GroupId> agent_to_group;
  std::optional<GroupId> master_group;
  int total_merges = 0;

  static SyncRegistry singletons(const std::vector<AgentId>& agents);

  GroupMap& group_of(AgentId agent) { return groups.at(agent_to_group.at(agent)); }
  const GroupMap& group_of(AgentId agent) const { return groups.at(agent_to_group.at(agent)); }
  bool fully_synchronized() const { return groups.size() == 1; }
};

// (A,B,d) pairs where A is the only reporter of offset d and B the only
// reporter of -d, team-wide this step. Same-group pairs are dropped.
std::vector<UniquePair> find_unique_pairs(const std::vector<SightingReport>& reports,
                                          const std::map<AgentId, GroupId>& agent_to_group);

// Merges B's group into A's with shift = posA + d - posB (into the mastergroup
// instead when one side is it). Returns the record for the event log.
MergeRecord merge_groups(SyncRegistry& reg, AgentId a, AgentId b, const Coord& d);

// Extracts friendly sightings from percepts, finds unique pairs and merges
// them in lexicographic (min id, max id) order, re-checking distinctness.
std::vector<MergeRecord> sync_step(SyncRegistry& reg,
                                   const std::map<AgentId, Percept>& percepts);

}  // namespace mapcsim
