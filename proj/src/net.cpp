#include "chargeplan/net.hpp"

#include <queue>
#include <unordered_map>
#include <unordered_set>

namespace chargeplan {

bool PowerGrid::is_radial() const {
  if (nodes.empty()) return false;
  if (branches.size() + 1 != nodes.size()) return false;
  std::unordered_map<PowerNodeId, std::vector<PowerNodeId>> adj;
  for (const auto& n : nodes) adj[n.id];
  for (const auto& b : branches) {
    if (!adj.count(b.from) || !adj.count(b.to)) return false;
    if (b.from == b.to) return false;
    adj[b.from].push_back(b.to);
    adj[b.to].push_back(b.from);
  }
  // Tree with n-1 edges: connectivity from the slack implies no cycles.
  std::unordered_set<PowerNodeId> seen;
  std::queue<PowerNodeId> bfs;
  if (!adj.count(slack_id)) return false;
  bfs.push(slack_id);
  seen.insert(slack_id);
  while (!bfs.empty()) {
    PowerNodeId u = bfs.front();
    bfs.pop();
    for (PowerNodeId v : adj[u])
      if (seen.insert(v).second) bfs.push(v);
  }
  return seen.size() == nodes.size();
}

}  // namespace chargeplan
