#include "copercept/comms/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "copercept/core/error.hpp"

namespace copercept {

namespace {

std::vector<AgentId> sorted_unique(std::vector<AgentId> ids) {
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
    throw ParameterError("communication graph has a repeated agent id");
  }
  return ids;
}

}  // namespace

CommGraph CommGraph::complete(const std::vector<AgentId>& agents) {
  CommGraph g;
  g.agents_ = sorted_unique(agents);
  for (AgentId a : g.agents_) {
    for (AgentId b : g.agents_) {
      if (a != b) g.links_.insert({a, b});
    }
  }
  return g;
}

CommGraph CommGraph::within_range(const std::vector<AgentId>& agents, const std::vector<Pose>& poses, double range_m) {
  if (agents.size() != poses.size()) throw ParameterError("within_range: one pose per agent required");
  if (!(range_m >= 0.0)) throw ParameterError("communication range must be non-negative");
  CommGraph g;
  g.agents_ = sorted_unique(agents);
  for (std::size_t i = 0; i < agents.size(); ++i) {
    for (std::size_t j = 0; j < agents.size(); ++j) {
      if (i == j) continue;
      if (std::hypot(poses[i].x - poses[j].x, poses[i].y - poses[j].y) <= range_m) {
        g.links_.insert({agents[i], agents[j]});
      }
    }
  }
  return g;
}

bool CommGraph::contains(AgentId a) const { return std::binary_search(agents_.begin(), agents_.end(), a); }

void CommGraph::require_link(AgentId from, AgentId to) const {
  if (!linked(from, to)) {
    throw ProtocolError("no link from agent " + std::to_string(from) + " to agent " + std::to_string(to));
  }
}

std::vector<AgentId> CommGraph::senders_of(AgentId to) const {
  std::vector<AgentId> out;
  for (AgentId a : agents_) {
    if (linked(a, to)) out.push_back(a);
  }
  return out;
}

void CommGraph::add_link(AgentId from, AgentId to) {
  if (!contains(from) || !contains(to)) throw ParameterError("link endpoint is not in the graph");
  if (from == to) throw ParameterError("self links are not allowed");
  links_.insert({from, to});
}

}  // namespace copercept
