#pragma once

#include <map>
#include <string>
#include <vector>

#include "chargeplan/model.hpp"
#include "chargeplan/net.hpp"
#include "chargeplan/pipeline.hpp"

namespace chargeplan::testing {

/// Writes a three-route comma-separated feed (stops/trips/stop_times) under
/// dir and returns dir. Deterministic content; distances via shape_dist.
std::string write_mini_feed(const std::string& dir);

/// Config wired to the mini feed with small thresholds so the mini network
/// yields several candidate stops and two power nodes.
RunConfig mini_config(const std::string& feed_dir, const std::string& out_dir);

/// One 40-ft route over two candidate stops coupled to a two-node grid.
/// Smallest instance that exercises every constraint family.
PlanningInstance two_stop_instance();

/// Two routes sharing a middle candidate stop; 12 integer variables.
/// Enumerable; the shared stop is the unique optimal station site.
PlanningInstance twin_route_instance();

/// Three routes sharing a middle candidate stop whose pile bound (M = 2)
/// forces the first route to charge at its own origin; 14 integer variables.
PlanningInstance tri_route_instance();

/// Two routes in disjoint zones with route-selection binaries and a two-zone
/// partition; 12 integer variables. eta/budget adjustable by the caller.
PlanningInstance fairness_mini_instance();

/// Feed + zone files for the trend-sweep instance: three routes (15/25/25 mi)
/// sharing a common mid stop, three power nodes, two zones arranged so the
/// two long routes have perfectly even coverage. Returns the feed directory.
std::string write_replication_feed(const std::string& dir);
void write_replication_zones(const std::string& path);
RunConfig replication_config(const std::string& feed_dir, const std::string& zone_path,
                             const std::string& out_dir);

/// One short route over the exact two-node feeder from the flow fixtures:
/// node-2 load 0.1 + 0.0329j pu, r = x = 0.01 pu. The route never needs to
/// charge, so the optimum is "build nothing" and the flows are pure base load.
PlanningInstance distflow_instance();

/// Radial five-node feeder (slack 1, a fork at node 2) with mixed loads.
PowerGrid five_node_feeder();

/// Zone partition and routes realizing the published three-zone ratio
/// example: ten selected links, nine others, five links split 50/50.
struct RatioFixture {
  TransitNetwork net;
  ZonePartition zones;
  std::set<RouteId> selected;
};
RatioFixture ratio_fixture(const std::vector<double>& link_lengths);  // 19 entries

/// Independent power-flow reference: complex-phasor backward/forward sweep
/// (currents and voltages), structurally unlike the squared-variable solver.
struct PhasorFlow {
  std::map<std::pair<PowerNodeId, PowerNodeId>, double> P_pu, Q_pu, l_pu;
  std::map<PowerNodeId, double> v_pu;  // squared magnitude
};
PhasorFlow phasor_reference(const PowerGrid& grid,
                            const std::map<PowerNodeId, PuLoad>& extra_load = {});

/// Minimum spanning-tree total length by exhaustive enumeration of all
/// labeled trees (Prüfer sequences); n <= 8.
double mst_total_length_bruteforce(const std::vector<PowerNode>& nodes);

/// Published per-route round trips: id, miles, charger class, and the
/// expected minimum charge counts at initial SOC 0.1..0.5.
struct PublishedRoute {
  const char* id;
  double roundtrip_miles;
  bool sixty_foot;
  int charges[5];
};
const std::vector<PublishedRoute>& published_routes();

/// Closed two-link route of the given total length and coach class.
BusRoute make_route(const std::string& id, double roundtrip_miles, bool sixty_foot);

}  // namespace chargeplan::testing
