#include "fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace chargeplan::testing {

namespace {

void write_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << body;
}

BusStop stop(const std::string& id, double lat, double lon) {
  BusStop s;
  s.id = id;
  s.name = id;
  s.lat = lat;
  s.lon = lon;
  return s;
}

BusRoute closed_route(const std::string& id, const std::vector<StopId>& stops,
                      const std::vector<double>& links, CoachClass coach) {
  BusRoute r;
  r.id = id;
  r.stops = stops;
  r.link_distances = links;
  r.coach_class = coach;
  r.apply_coach_defaults();
  return r;
}

PowerNode node(PowerNodeId id, const StopId& anchor, double lat, double lon, double p_pu,
               double q_pu) {
  PowerNode n;
  n.id = id;
  n.anchor_stop = anchor;
  n.lat = lat;
  n.lon = lon;
  n.load_pu = {p_pu, q_pu};
  return n;
}

PowerBranch branch(PowerNodeId from, PowerNodeId to, double r, double x, double miles,
                   double limit = 1.0) {
  PowerBranch b;
  b.from = from;
  b.to = to;
  b.r_pu = r;
  b.x_pu = x;
  b.length_miles = miles;
  b.current_sq_limit_pu = limit;
  return b;
}

CouplingCandidate couple(PowerNodeId node_id, const StopId& stop_id, double miles,
                         const EconomicParams& econ) {
  CouplingCandidate c;
  c.power_node_id = node_id;
  c.stop_id = stop_id;
  c.line_miles = miles;
  c.line_cost_usd = miles * econ.line_cost_per_mile;
  return c;
}

}  // namespace

std::string write_mini_feed(const std::string& dir) {
  std::filesystem::create_directories(dir);
  write_file(std::filesystem::path(dir) / "stops.txt",
             "stop_id,stop_name,stop_lat,stop_lon\n"
             "s1,First,47.46,-122.30\n"
             "s2,Second,47.48,-122.30\n"
             "s3,Hub,47.50,-122.30\n"
             "s4,NorthEnd,47.52,-122.30\n"
             "s5,WestEnd,47.50,-122.34\n"
             "s6,EastEnd,47.50,-122.26\n"
             "s7,Uptown,47.54,-122.30\n");
  write_file(std::filesystem::path(dir) / "trips.txt",
             "route_id,trip_id,direction_id\n"
             "10,t10a,0\n"
             "10,t10b,1\n"
             "20,t20a,0\n"
             "30,t30a,0\n");
  write_file(std::filesystem::path(dir) / "stop_times.txt",
             "trip_id,stop_sequence,stop_id,shape_dist_traveled\n"
             "t10a,1,s1,0\n"
             "t10a,2,s2,7300\n"
             "t10a,3,s3,14600\n"
             "t10a,4,s4,21900\n"
             "t10b,1,s4,0\n"
             "t10b,2,s3,7300\n"
             "t10b,3,s2,14600\n"
             "t10b,4,s1,21900\n"
             "t20a,1,s5,\n"
             "t20a,2,s3,\n"
             "t20a,3,s6,\n"
             "t30a,1,s7,\n"
             "t30a,2,s3,\n");
  return dir;
}

RunConfig mini_config(const std::string& feed_dir, const std::string& out_dir) {
  RunConfig cfg;
  cfg.feed_dir = feed_dir;
  cfg.output_dir = out_dir;
  cfg.selection.distance_threshold_ft = 20000.0;
  cfg.selection.common_stop_min_routes = 2;
  cfg.selection.route_filter = {"*"};
  cfg.gridsynth.cluster_threshold_km = 8.0;
  cfg.coupling_k = 1;
  cfg.battery.soc_init = 0.12;
  cfg.battery.big_m = 3;
  return cfg;
}

PlanningInstance two_stop_instance() {
  PlanningInstance inst;
  inst.transit.stops = {stop("sA", 47.50, -122.30), stop("sB", 47.55, -122.30)};
  inst.transit.routes = {closed_route("R1", {"sA", "sB", "sA"}, {3.5, 3.5}, CoachClass::FortyFoot)};
  inst.transit.candidate_nodes = {"sA", "sB"};

  inst.grid.nodes = {node(1, "sA", 47.50, -122.30, 0.05, 0.0164),
                     node(2, "sB", 47.55, -122.30, 0.05, 0.0164)};
  inst.grid.branches = {branch(1, 2, 0.0066, 0.0131, 3.45)};
  inst.grid.slack_id = 1;

  inst.coupling = {couple(1, "sA", 0.0, inst.econ), couple(2, "sB", 0.0, inst.econ)};
  inst.battery.soc_init = 0.1;
  inst.battery.big_m = 2;
  return inst;
}

PlanningInstance twin_route_instance() {
  PlanningInstance inst;
  inst.transit.stops = {stop("sA", 47.50, -122.30), stop("sB", 47.60, -122.30),
                        stop("sC", 47.70, -122.30)};
  inst.transit.routes = {
      closed_route("R1", {"sA", "sB", "sA"}, {12.0, 12.0}, CoachClass::FortyFoot),
      closed_route("R2", {"sC", "sB", "sC"}, {12.0, 12.0}, CoachClass::FortyFoot)};
  inst.transit.candidate_nodes = {"sA", "sB"};

  inst.grid.nodes = {node(1, "sA", 47.50, -122.30, 0.05, 0.0164),
                     node(2, "sB", 47.60, -122.30, 0.05, 0.0164)};
  inst.grid.branches = {branch(1, 2, 0.0131, 0.0262, 6.9)};
  inst.grid.slack_id = 1;

  inst.coupling = {couple(1, "sA", 0.0, inst.econ), couple(2, "sB", 0.0, inst.econ)};
  inst.battery.soc_init = 0.2;
  inst.battery.big_m = 2;
  return inst;
}

PlanningInstance tri_route_instance() {
  PlanningInstance inst = twin_route_instance();
  inst.transit.stops.push_back(stop("sD", 47.60, -122.44));
  inst.transit.routes.push_back(
      closed_route("R3", {"sD", "sB", "sD"}, {12.0, 12.0}, CoachClass::FortyFoot));
  return inst;
}

PlanningInstance fairness_mini_instance() {
  PlanningInstance inst;
  inst.transit.stops = {stop("sA", 47.50, -122.30), stop("sB", 47.60, -122.30),
                        stop("sC", 47.70, -122.30)};
  inst.transit.routes = {
      closed_route("R1", {"sA", "sB", "sA"}, {12.0, 12.0}, CoachClass::FortyFoot),
      closed_route("R2", {"sC", "sB", "sC"}, {12.0, 12.0}, CoachClass::FortyFoot)};
  inst.transit.candidate_nodes = {"sA", "sC"};

  inst.grid.nodes = {node(1, "sA", 47.50, -122.30, 0.05, 0.0164),
                     node(2, "sC", 47.70, -122.30, 0.05, 0.0164)};
  inst.grid.branches = {branch(1, 2, 0.0263, 0.0526, 13.8)};
  inst.grid.slack_id = 1;

  inst.coupling = {couple(1, "sA", 0.0, inst.econ), couple(2, "sC", 0.0, inst.econ)};
  inst.battery.soc_init = 0.2;
  inst.battery.big_m = 2;

  inst.fairness_enabled = true;
  inst.fairness_eta = 0.9;
  inst.fairness_budget = 2;
  inst.budget_is_equality = true;
  inst.zones.zone_names = {"zone1", "zone2"};
  inst.zones.link_weights[{"R1", 0}] = {{"zone1", 1.0}};
  inst.zones.link_weights[{"R1", 1}] = {{"zone1", 1.0}};
  inst.zones.link_weights[{"R2", 0}] = {{"zone2", 1.0}};
  inst.zones.link_weights[{"R2", 1}] = {{"zone2", 1.0}};
  return inst;
}

std::string write_replication_feed(const std::string& dir) {
  std::filesystem::create_directories(dir);
  write_file(std::filesystem::path(dir) / "stops.txt",
             "stop_id,stop_name,stop_lat,stop_lon\n"
             "m,Commons,47.50,-122.30\n"
             "o1,Origin1,47.50,-122.40\n"
             "o2,Origin2,47.50,-122.20\n"
             "o3,Origin3,47.50,-122.403\n"
             "p2,Mid2,47.50,-122.25\n"
             "p3,Mid3,47.50,-122.3515\n");
  write_file(std::filesystem::path(dir) / "trips.txt",
             "route_id,trip_id,direction_id\n"
             "R1,tr1,0\n"
             "R2,tr2,0\n"
             "R3,tr3,0\n");
  // Single-direction trips; the loader mirrors them into closed loops.
  write_file(std::filesystem::path(dir) / "stop_times.txt",
             "trip_id,stop_sequence,stop_id,shape_dist_traveled\n"
             "tr1,1,o1,0\n"
             "tr1,2,m,39600\n"
             "tr2,1,o2,0\n"
             "tr2,2,p2,59400\n"
             "tr2,3,m,118800\n"
             "tr3,1,o3,0\n"
             "tr3,2,p3,59400\n"
             "tr3,3,m,118800\n");
  return dir;
}

void write_replication_zones(const std::string& path) {
  write_file(path,
             "# route_id,link_index,zone_id,weight\n"
             "R1,0,zone1,1.0\n"
             "R1,1,zone2,1.0\n"
             "R2,0,zone1,1.0\n"
             "R2,1,zone1,1.0\n"
             "R2,2,zone1,1.0\n"
             "R2,3,zone1,0.111111\n"
             "R2,3,zone2,0.888889\n"
             "R3,0,zone2,1.0\n"
             "R3,1,zone2,1.0\n"
             "R3,2,zone2,1.0\n"
             "R3,3,zone2,0.111111\n"
             "R3,3,zone1,0.888889\n");
}

RunConfig replication_config(const std::string& feed_dir, const std::string& zone_path,
                             const std::string& out_dir) {
  RunConfig cfg;
  cfg.feed_dir = feed_dir;
  cfg.zone_file = zone_path;
  cfg.output_dir = out_dir;
  cfg.selection.route_filter = {"*"};
  cfg.coupling_k = 1;
  cfg.battery.soc_init = 0.1;
  cfg.fairness_eta = 0.9;
  cfg.fairness_budget = 2;
  cfg.sweep_soc_init = {0.1, 0.2, 0.3, 0.4};
  cfg.sweep_eta = {0.5, 0.9, 0.95, 0.99};
  return cfg;
}

PlanningInstance distflow_instance() {
  PlanningInstance inst;
  inst.transit.stops = {stop("sA", 47.50, -122.30), stop("sB", 47.52, -122.30)};
  inst.transit.routes = {closed_route("R1", {"sA", "sB", "sA"}, {1.0, 1.0}, CoachClass::FortyFoot)};
  inst.transit.candidate_nodes = {"sA"};

  inst.grid.nodes = {node(1, "sA", 47.50, -122.30, 0.0, 0.0),
                     node(2, "sB", 47.52, -122.30, 0.1, 0.0329)};
  inst.grid.branches = {branch(1, 2, 0.01, 0.01, 1.38)};
  inst.grid.slack_id = 1;

  inst.coupling = {couple(1, "sA", 0.0, inst.econ)};
  inst.battery.soc_init = 0.5;
  inst.battery.big_m = 2;
  return inst;
}

PowerGrid five_node_feeder() {
  PowerGrid grid;
  grid.nodes = {node(1, "", 47.50, -122.30, 0.0, 0.0), node(2, "", 47.52, -122.30, 0.04, 0.0131),
                node(3, "", 47.54, -122.30, 0.06, 0.0197), node(4, "", 47.52, -122.27, 0.03, 0.0099),
                node(5, "", 47.52, -122.24, 0.05, 0.0164)};
  grid.branches = {branch(1, 2, 0.010, 0.008, 1.4), branch(2, 3, 0.006, 0.005, 1.4),
                   branch(2, 4, 0.008, 0.006, 1.5), branch(4, 5, 0.005, 0.004, 1.5)};
  grid.slack_id = 1;
  return grid;
}

RatioFixture ratio_fixture(const std::vector<double>& link_lengths) {
  if (link_lengths.size() != 19) throw std::invalid_argument("need 19 link lengths");
  RatioFixture fx;

  // Physical link k (1-based) -> owning route and position within it.
  const std::vector<int> beb_links = {2, 4, 5, 6, 7, 9, 10, 14, 15, 18};
  const std::vector<int> other_links = {1, 3, 8, 11, 12, 13, 16, 17, 19};

  auto build = [&](const std::string& route_id, const std::vector<int>& links) {
    BusRoute r;
    r.id = route_id;
    r.stops.push_back(route_id + "_s0");
    for (size_t k = 0; k < links.size(); ++k) {
      r.stops.push_back(k + 1 == links.size() ? route_id + "_s0"
                                              : route_id + "_s" + std::to_string(k + 1));
      r.link_distances.push_back(link_lengths[static_cast<size_t>(links[k] - 1)]);
    }
    return r;
  };
  fx.net.routes = {build("beb", beb_links), build("other", other_links)};
  fx.selected = {"beb"};

  fx.zones.zone_names = {"zone1", "zone2", "zone3"};
  auto weights_for = [](int link) -> std::vector<ZoneWeight> {
    switch (link) {
      case 1: case 2: case 3: case 4: case 5: case 6:
        return {{"zone1", 1.0}};
      case 7:
        return {{"zone1", 0.5}, {"zone3", 0.5}};
      case 8: case 9:
        return {{"zone1", 0.5}, {"zone2", 0.5}};
      case 10: case 11: case 12:
        return {{"zone2", 1.0}};
      case 13: case 16:
        return {{"zone2", 0.5}, {"zone3", 0.5}};
      default:  // 14, 15, 17, 18, 19
        return {{"zone3", 1.0}};
    }
  };
  auto assign = [&](const std::string& route_id, const std::vector<int>& links) {
    for (size_t k = 0; k < links.size(); ++k)
      fx.zones.link_weights[{route_id, static_cast<int>(k)}] = weights_for(links[k]);
  };
  assign("beb", beb_links);
  assign("other", other_links);
  return fx;
}

PhasorFlow phasor_reference(const PowerGrid& grid, const std::map<PowerNodeId, PuLoad>& extra_load) {
  using cx = std::complex<double>;
  std::map<PowerNodeId, cx> V, S;
  for (const auto& n : grid.nodes) {
    V[n.id] = cx(std::sqrt(grid.v_slack_sq_pu), 0.0);
    cx s(n.load_pu.p, n.load_pu.q);
    auto it = extra_load.find(n.id);
    if (it != extra_load.end()) s += cx(it->second.p, it->second.q);
    S[n.id] = s;
  }

  // Branches ordered root-outward so one backward and one forward pass per
  // iteration suffice.
  std::vector<const PowerBranch*> ordered;
  {
    std::map<PowerNodeId, std::vector<const PowerBranch*>> out;
    for (const auto& b : grid.branches) out[b.from].push_back(&b);
    std::vector<PowerNodeId> frontier = {grid.slack_id};
    while (!frontier.empty()) {
      std::vector<PowerNodeId> next;
      for (PowerNodeId id : frontier)
        for (const PowerBranch* b : out[id]) {
          ordered.push_back(b);
          next.push_back(b->to);
        }
      frontier = next;
    }
    if (ordered.size() != grid.branches.size())
      throw std::runtime_error("feeder is not a tree rooted at the slack node");
  }

  std::map<PowerNodeId, cx> branch_current;  // keyed by the "to" node
  for (int iter = 0; iter < 400; ++iter) {
    // Backward: node injection currents, accumulated toward the root.
    for (const auto& n : grid.nodes) branch_current[n.id] = std::conj(S[n.id] / V[n.id]);
    branch_current[grid.slack_id] = cx(0.0, 0.0);
    for (auto it = ordered.rbegin(); it != ordered.rend(); ++it)
      if ((*it)->from != grid.slack_id) branch_current[(*it)->from] += branch_current[(*it)->to];

    // Forward: voltage drops away from the root.
    double delta = 0.0;
    for (const PowerBranch* b : ordered) {
      cx v_new = V[b->from] - cx(b->r_pu, b->x_pu) * branch_current[b->to];
      delta = std::max(delta, std::abs(v_new - V[b->to]));
      V[b->to] = v_new;
    }
    if (delta < 1e-13 && iter > 0) break;
  }

  PhasorFlow flow;
  for (const auto& b : grid.branches) {
    cx I = branch_current[b.to];
    cx Ssend = V[b.from] * std::conj(I);
    flow.P_pu[{b.from, b.to}] = Ssend.real();
    flow.Q_pu[{b.from, b.to}] = Ssend.imag();
    flow.l_pu[{b.from, b.to}] = std::norm(I);
  }
  for (const auto& n : grid.nodes) flow.v_pu[n.id] = std::norm(V[n.id]);
  return flow;
}

double mst_total_length_bruteforce(const std::vector<PowerNode>& nodes) {
  const int n = static_cast<int>(nodes.size());
  if (n <= 1) return 0.0;
  if (n > 8) throw std::invalid_argument("brute force limited to 8 nodes");

  std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      d[i][j] = geodesic_miles(nodes[i].point(), nodes[j].point());
  if (n == 2) return d[0][1];

  // Every labeled tree on n nodes corresponds to one length-(n-2) sequence
  // over node labels; decode each and keep the cheapest.
  const int len = n - 2;
  std::vector<int> seq(len, 0);
  double best = std::numeric_limits<double>::infinity();
  while (true) {
    std::vector<int> degree(n, 1);
    for (int s : seq) degree[s]++;
    double total = 0.0;
    std::vector<int> deg = degree;
    for (int s : seq) {
      int leaf = -1;
      for (int v = 0; v < n; ++v)
        if (deg[v] == 1) { leaf = v; break; }
      total += d[leaf][s];
      deg[leaf] = 0;
      deg[s]--;
    }
    int a = -1, b = -1;
    for (int v = 0; v < n; ++v)
      if (deg[v] == 1) (a < 0 ? a : b) = v;
    total += d[a][b];
    best = std::min(best, total);

    int k = len - 1;
    while (k >= 0 && seq[k] == n - 1) seq[k--] = 0;
    if (k < 0) break;
    seq[k]++;
  }
  return best;
}

const std::vector<PublishedRoute>& published_routes() {
  static const std::vector<PublishedRoute> rows = {
      {"22", 13.82, false, {1, 0, 0, 0, 0}},  {"101", 28.28, true, {3, 2, 0, 0, 0}},
      {"102", 47.81, true, {5, 4, 2, 1, 0}},  {"111", 52.34, true, {5, 4, 3, 1, 0}},
      {"150", 44.18, true, {5, 3, 2, 0, 0}},  {"153", 16.37, false, {2, 1, 0, 0, 0}},
      {"156", 25.04, false, {2, 1, 0, 0, 0}}, {"168", 24.35, false, {2, 1, 0, 0, 0}},
      {"177", 48.66, true, {5, 4, 2, 1, 0}},  {"181", 30.08, false, {2, 1, 0, 0, 0}},
      {"182", 15.10, false, {1, 0, 0, 0, 0}}, {"183", 21.79, false, {2, 1, 0, 0, 0}},
      {"187", 11.81, false, {1, 0, 0, 0, 0}}, {"190", 41.79, true, {4, 3, 2, 0, 0}},
      {"193", 50.62, true, {5, 4, 2, 1, 0}},
  };
  return rows;
}

BusRoute make_route(const std::string& id, double roundtrip_miles, bool sixty_foot) {
  return closed_route(id, {id + "_o", id + "_t", id + "_o"},
                      {roundtrip_miles / 2.0, roundtrip_miles / 2.0},
                      sixty_foot ? CoachClass::SixtyFoot : CoachClass::FortyFoot);
}

}  // namespace chargeplan::testing
