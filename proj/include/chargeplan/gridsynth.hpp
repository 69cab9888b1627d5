#pragma once

#include <string>
#include <vector>

#include "chargeplan/net.hpp"

namespace chargeplan {

struct GridSynthConfig {
  double cluster_threshold_km = 2.0;
  double r_per_mile_pu = 0.0019;
  double x_per_mile_pu = 0.0038;
  double default_current_sq_limit_pu = 1.0;
  PuLoad default_load_pu{0.05, 0.05 * 0.3286841}; // 500 kW at 0.95 power factor, 10 MVA base

  void validate() const;
};

/// An eligible (power node, candidate stop) pair whose connecting line the
/// optimizer may build.
struct CouplingCandidate {
  PowerNodeId power_node_id = 0;
  StopId stop_id;
  double line_miles = 0.0;
  double line_cost_usd = 0.0;
};

/// Greedy clustering over the candidate list (in the given order): each
/// unvisited stop becomes a power-node anchor and marks every later stop
/// within the threshold as visited.
std::vector<StopId> select_power_nodes(const std::vector<BusStop>& candidates,
                                       const GridSynthConfig& cfg);

/// Minimum spanning tree over the geodesic complete graph of the anchors.
/// Picks the highest-degree node as slack (ties to the lowest id) and orients
/// every branch away from it. Zero-length branches are reported as warnings.
PowerGrid build_mst_topology(const std::vector<PowerNode>& anchors,
                             std::vector<std::string>* warnings = nullptr);

/// Fills branch impedances/limits from geodesic lengths and node loads from
/// the config defaults; re-derives the slack by the degree rule.
PowerGrid assign_electrics(const PowerGrid& topology, const GridSynthConfig& cfg);

/// k nearest power nodes per stop (ties to the lower node id), line cost
/// proportional to geodesic distance; k is clamped to the node count.
std::vector<CouplingCandidate> coupling_candidates(const std::vector<BusStop>& stops,
                                                   const PowerGrid& grid,
                                                   const EconomicParams& econ, int k);

/// Optional per-network override table. Row shapes:
///   node,<id>,<load_kw>,<vmin_sq_pu>,<vmax_sq_pu>[,<load_kvar>]
///   branch,<from>,<to>,<r_pu>,<x_pu>,<current_sq_limit_pu>
///   slack,<id>
/// Empty numeric fields leave the synthesized value in place; omitted
/// reactive load is filled at 0.95 power factor. Branch rows for pairs not
/// in the tree are rejected; a slack row re-orients the tree.
void apply_grid_override(PowerGrid& grid, const std::string& path);

}  // namespace chargeplan
