#include "chargeplan/gridsynth.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <stdexcept>

#include "chargeplan/csv.hpp"

namespace chargeplan {

void GridSynthConfig::validate() const {
  if (!(cluster_threshold_km > 0.0)) throw std::invalid_argument("cluster threshold must be positive");
  if (!(r_per_mile_pu > 0.0) || !(x_per_mile_pu > 0.0))
    throw std::invalid_argument("impedance densities must be positive");
  if (!(default_current_sq_limit_pu > 0.0))
    throw std::invalid_argument("current limit must be positive");
}

std::vector<StopId> select_power_nodes(const std::vector<BusStop>& candidates,
                                       const GridSynthConfig& cfg) {
  cfg.validate();
  std::vector<StopId> anchors;
  std::vector<char> visited(candidates.size(), 0);
  for (size_t m = 0; m < candidates.size(); ++m) {
    if (visited[m]) continue;
    anchors.push_back(candidates[m].id);
    for (size_t n = m + 1; n < candidates.size(); ++n) {
      if (visited[n]) continue;
      if (geodesic_km(candidates[m].point(), candidates[n].point()) < cfg.cluster_threshold_km)
        visited[n] = 1;
    }
  }
  return anchors;
}

namespace {

/// Breadth-first re-orientation of every branch away from the given root.
void orient_away(PowerGrid& grid, PowerNodeId root) {
  std::map<PowerNodeId, std::vector<size_t>> adj;
  for (size_t b = 0; b < grid.branches.size(); ++b) {
    adj[grid.branches[b].from].push_back(b);
    adj[grid.branches[b].to].push_back(b);
  }
  std::map<PowerNodeId, char> seen{{root, 1}};
  std::queue<PowerNodeId> bfs;
  bfs.push(root);
  while (!bfs.empty()) {
    const PowerNodeId u = bfs.front();
    bfs.pop();
    for (size_t bi : adj[u]) {
      PowerBranch& b = grid.branches[bi];
      const PowerNodeId other = b.from == u ? b.to : b.from;
      if (seen.count(other)) continue;
      seen[other] = 1;
      if (b.from != u) std::swap(b.from, b.to);
      bfs.push(other);
    }
  }
}

/// Degree-rule slack and breadth-first orientation away from it.
void orient_from_slack(PowerGrid& grid) {
  std::map<PowerNodeId, int> degree;
  for (const auto& b : grid.branches) {
    ++degree[b.from];
    ++degree[b.to];
  }
  PowerNodeId slack = grid.nodes.front().id;
  int best = -1;
  for (const auto& n : grid.nodes) {
    const int d = degree.count(n.id) ? degree[n.id] : 0;
    if (d > best || (d == best && n.id < slack)) {
      best = d;
      slack = n.id;
    }
  }
  grid.slack_id = slack;
  grid.v_slack_sq_pu = 1.0;
  orient_away(grid, slack);
}

}  // namespace

PowerGrid build_mst_topology(const std::vector<PowerNode>& anchors,
                             std::vector<std::string>* warnings) {
  if (anchors.empty()) throw std::invalid_argument("no power nodes to connect");
  PowerGrid grid;
  grid.nodes = anchors;
  const size_t n = anchors.size();
  if (n == 1) {
    grid.slack_id = anchors[0].id;
    return grid;
  }

  // Prim over the complete geodesic graph; ties resolved by lowest index.
  std::vector<char> in_tree(n, 0);
  std::vector<double> best_dist(n, std::numeric_limits<double>::infinity());
  std::vector<int> best_from(n, -1);
  in_tree[0] = 1;
  for (size_t j = 1; j < n; ++j) {
    best_dist[j] = geodesic_miles(anchors[0].point(), anchors[j].point());
    best_from[j] = 0;
  }
  for (size_t added = 1; added < n; ++added) {
    int pick = -1;
    for (size_t j = 0; j < n; ++j) {
      if (in_tree[j]) continue;
      if (pick < 0 || best_dist[j] < best_dist[pick]) pick = static_cast<int>(j);
    }
    in_tree[pick] = 1;
    PowerBranch b;
    b.from = anchors[best_from[pick]].id;
    b.to = anchors[pick].id;
    b.length_miles = best_dist[pick];
    if (b.length_miles == 0.0 && warnings)
      warnings->push_back("zero-length branch between nodes " + std::to_string(b.from) + " and " +
                          std::to_string(b.to));
    grid.branches.push_back(b);
    for (size_t j = 0; j < n; ++j) {
      if (in_tree[j]) continue;
      const double d = geodesic_miles(anchors[pick].point(), anchors[j].point());
      if (d < best_dist[j]) {
        best_dist[j] = d;
        best_from[j] = pick;
      }
    }
  }
  orient_from_slack(grid);
  return grid;
}

PowerGrid assign_electrics(const PowerGrid& topology, const GridSynthConfig& cfg) {
  cfg.validate();
  PowerGrid grid = topology;
  if (grid.nodes.empty()) throw std::invalid_argument("empty grid");
  if (!grid.is_radial()) throw std::invalid_argument("topology not radial");
  for (auto& b : grid.branches) {
    b.r_pu = std::max(b.length_miles * cfg.r_per_mile_pu, 1e-6);
    b.x_pu = std::max(b.length_miles * cfg.x_per_mile_pu, 1e-6);
    b.current_sq_limit_pu = cfg.default_current_sq_limit_pu;
  }
  for (auto& nd : grid.nodes) nd.load_pu = cfg.default_load_pu;
  if (grid.branches.empty())
    grid.slack_id = grid.nodes.front().id;
  else
    orient_from_slack(grid);
  for (auto& nd : grid.nodes)
    if (nd.id == grid.slack_id) nd.load_pu = {0.0, 0.0};  // feeder head carries no local load
  grid.validate();
  return grid;
}

std::vector<CouplingCandidate> coupling_candidates(const std::vector<BusStop>& stops,
                                                   const PowerGrid& grid,
                                                   const EconomicParams& econ, int k) {
  if (k < 1) throw std::invalid_argument("coupling candidate count must be at least 1");
  std::vector<CouplingCandidate> out;
  std::vector<const BusStop*> ordered;
  for (const auto& s : stops) ordered.push_back(&s);
  std::sort(ordered.begin(), ordered.end(),
            [](const BusStop* a, const BusStop* b) { return a->id < b->id; });
  for (const BusStop* s : ordered) {
    std::vector<std::pair<double, PowerNodeId>> dist;
    for (const auto& nd : grid.nodes)
      dist.emplace_back(geodesic_miles(s->point(), nd.point()), nd.id);
    std::sort(dist.begin(), dist.end());
    const int take = std::min<int>(k, static_cast<int>(dist.size()));
    for (int i = 0; i < take; ++i)
      out.push_back({dist[i].second, s->id, dist[i].first, dist[i].first * econ.line_cost_per_mile});
  }
  return out;
}

void apply_grid_override(PowerGrid& grid, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open grid override " + path);
  std::string line;
  int lineno = 0;
  auto opt = [](const std::vector<std::string>& f, size_t i) -> std::optional<double> {
    if (i >= f.size() || f[i].empty()) return std::nullopt;
    return std::stod(f[i]);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto f = CsvTable::split_line(line);
    const std::string where = path + ":" + std::to_string(lineno);
    if (f[0] == "node") {
      if (f.size() < 2) throw std::runtime_error(where + ": node row needs an id");
      const PowerNodeId id = std::stoi(f[1]);
      PowerNode* nd = nullptr;
      for (auto& n : grid.nodes)
        if (n.id == id) nd = &n;
      if (!nd) throw std::runtime_error(where + ": unknown power node " + f[1]);
      if (auto kw = opt(f, 2)) {
        nd->load_pu.p = *kw / grid.base_kw();
        nd->load_pu.q = nd->load_pu.p * 0.3286841;  // 0.95 power factor when unspecified
      }
      if (auto q = opt(f, 5)) nd->load_pu.q = *q / grid.base_kw();
      if (auto v = opt(f, 3)) nd->vmin_sq_pu = *v;
      if (auto v = opt(f, 4)) nd->vmax_sq_pu = *v;
    } else if (f[0] == "branch") {
      if (f.size() < 3) throw std::runtime_error(where + ": branch row needs endpoints");
      const PowerNodeId a = std::stoi(f[1]), b = std::stoi(f[2]);
      PowerBranch* br = nullptr;
      for (auto& x : grid.branches)
        if ((x.from == a && x.to == b) || (x.from == b && x.to == a)) br = &x;
      if (!br) throw std::runtime_error(where + ": branch " + f[1] + "-" + f[2] + " not in the tree");
      if (auto r = opt(f, 3)) br->r_pu = *r;
      if (auto x = opt(f, 4)) br->x_pu = *x;
      if (auto lim = opt(f, 5)) br->current_sq_limit_pu = *lim;
    } else if (f[0] == "slack") {
      if (f.size() < 2) throw std::runtime_error(where + ": slack row needs an id");
      grid.slack_id = std::stoi(f[1]);
      if (!grid.find_node(grid.slack_id))
        throw std::runtime_error(where + ": unknown power node " + f[1]);
      orient_away(grid, grid.slack_id);
      for (auto& n : grid.nodes)
        if (n.id == grid.slack_id) n.load_pu = {0.0, 0.0};
    } else {
      throw std::runtime_error(where + ": unknown row kind " + f[0]);
    }
  }
  grid.validate();
}

}  // namespace chargeplan
