#pragma once

#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "copercept/core/grid.hpp"
#include "copercept/core/pose.hpp"

namespace copercept {

/// Directed links over which agents may exchange messages.
class CommGraph {
 public:
  /// Every ordered pair of distinct agents.
  static CommGraph complete(const std::vector<AgentId>& agents);

  /// Links between agents whose positions are at most `range_m` apart.
  static CommGraph within_range(const std::vector<AgentId>& agents, const std::vector<Pose>& poses, double range_m);

  const std::vector<AgentId>& agents() const { return agents_; }
  bool contains(AgentId a) const;
  bool linked(AgentId from, AgentId to) const { return links_.count({from, to}) > 0; }

  /// Throws ProtocolError when there is no from -> to link.
  void require_link(AgentId from, AgentId to) const;

  /// Agents that `to` can hear from, ascending.
  std::vector<AgentId> senders_of(AgentId to) const;

  void add_link(AgentId from, AgentId to);
  void remove_link(AgentId from, AgentId to) { links_.erase({from, to}); }

 private:
  std::vector<AgentId> agents_;  // ascending
  std::set<std::pair<AgentId, AgentId>> links_;
};

}  // namespace copercept
