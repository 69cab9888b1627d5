#pragma once

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "chargeplan/geo.hpp"

namespace chargeplan {

using StopId = std::string;
using RouteId = std::string;
using PowerNodeId = int;

struct BusStop {
  StopId id;
  std::string name;
  double lat = 0.0;
  double lon = 0.0;

  GeoPoint point() const { return {lat, lon}; }
};

enum class CoachClass { FortyFoot, SixtyFoot };

/// Per-class defaults: battery kWh, consumption kWh/mile, charger kW.
struct CoachSpec {
  double battery_kwh;
  double consumption_kwh_per_mile;
  double charger_kw;
};

inline CoachSpec coach_defaults(CoachClass c) {
  switch (c) {
    case CoachClass::FortyFoot: return {313.0, 1.99, 150.0};
    case CoachClass::SixtyFoot: return {578.0, 3.74, 200.0};
  }
  throw std::logic_error("unknown coach class");
}

/// A closed round-trip bus route. stops.front() == stops.back() (the origin);
/// link_distances[k] is the driving distance in miles from stops[k] to stops[k+1].
struct BusRoute {
  RouteId id;
  std::vector<StopId> stops;
  std::vector<double> link_distances;
  CoachClass coach_class = CoachClass::FortyFoot;
  double battery_kwh = 313.0;
  double consumption_kwh_per_mile = 1.99;
  double charger_kw = 150.0;
  double dwell_hours_default = 0.2;
  std::map<StopId, double> dwell_hours_override;

  double dwell_hours_at(const StopId& stop) const {
    auto it = dwell_hours_override.find(stop);
    return it == dwell_hours_override.end() ? dwell_hours_default : it->second;
  }

  void apply_coach_defaults() {
    const CoachSpec s = coach_defaults(coach_class);
    battery_kwh = s.battery_kwh;
    consumption_kwh_per_mile = s.consumption_kwh_per_mile;
    charger_kw = s.charger_kw;
  }

  void validate() const {
    if (stops.size() < 2 || link_distances.empty()) throw std::invalid_argument("degenerate route");
    if (link_distances.size() + 1 != stops.size())
      throw std::invalid_argument("route " + id + ": link/stop count mismatch");
    if (stops.front() != stops.back())
      throw std::invalid_argument("route " + id + ": not a closed round trip");
    for (double d : link_distances)
      if (!(d > 0.0)) throw std::invalid_argument("route " + id + ": non-positive link distance");
    if (!(battery_kwh > 0.0) || !(consumption_kwh_per_mile > 0.0) || !(charger_kw > 0.0))
      throw std::invalid_argument("route " + id + ": non-positive battery parameters");
    if (dwell_hours_default < 0.0) throw std::invalid_argument("route " + id + ": negative dwell");
  }
};

/// Sum of link distances over the closed stop sequence.
inline double route_roundtrip_miles(const BusRoute& route) {
  if (route.stops.empty() || route.link_distances.empty())
    throw std::invalid_argument("degenerate route");
  double total = 0.0;
  for (double d : route.link_distances) total += d;
  return total;
}

struct TransitNetwork {
  std::vector<BusStop> stops;
  std::vector<BusRoute> routes;
  std::set<StopId> candidate_nodes;

  const BusStop* find_stop(const StopId& id) const {
    for (const auto& s : stops)
      if (s.id == id) return &s;
    return nullptr;
  }

  const BusRoute* find_route(const RouteId& id) const {
    for (const auto& r : routes)
      if (r.id == id) return &r;
    return nullptr;
  }

  void validate() const {
    std::set<StopId> ids;
    for (const auto& s : stops) {
      if (!ids.insert(s.id).second) throw std::invalid_argument("duplicate stop id " + s.id);
      if (s.lat < -90.0 || s.lat > 90.0 || s.lon < -180.0 || s.lon > 180.0)
        throw std::invalid_argument("stop " + s.id + ": coordinates out of range");
    }
    for (const auto& r : routes) {
      r.validate();
      for (const auto& sid : r.stops)
        if (!ids.count(sid))
          throw std::invalid_argument("route " + r.id + " references unknown stop " + sid);
    }
    for (const auto& c : candidate_nodes)
      if (!ids.count(c)) throw std::invalid_argument("candidate node " + c + " is not a stop");
  }
};

/// Complex power pair in per-unit.
struct PuLoad {
  double p = 0.0;
  double q = 0.0;
};

struct PowerNode {
  PowerNodeId id = 0;
  StopId anchor_stop;  // transit stop this node is co-located with, if any
  double lat = 0.0;
  double lon = 0.0;
  PuLoad load_pu;
  double vmin_sq_pu = 0.9025;  // 0.95^2
  double vmax_sq_pu = 1.1025;  // 1.05^2

  GeoPoint point() const { return {lat, lon}; }
};

struct PowerBranch {
  PowerNodeId from = 0;  // oriented away from the slack node
  PowerNodeId to = 0;
  double r_pu = 0.0;
  double x_pu = 0.0;
  double current_sq_limit_pu = 1.0;
  double length_miles = 0.0;
};

struct PowerGrid {
  std::vector<PowerNode> nodes;
  std::vector<PowerBranch> branches;
  PowerNodeId slack_id = 0;
  double v_slack_sq_pu = 1.0;
  double base_mva = 10.0;
  double base_kv = 110.0;

  double base_kw() const { return base_mva * 1000.0; }

  const PowerNode* find_node(PowerNodeId id) const {
    for (const auto& n : nodes)
      if (n.id == id) return &n;
    return nullptr;
  }

  /// Verifies the branch set is a tree spanning all nodes, reachable from slack.
  bool is_radial() const;

  void validate() const {
    for (const auto& n : nodes) {
      if (!(n.vmin_sq_pu > 0.0) || !(n.vmin_sq_pu < n.vmax_sq_pu))
        throw std::invalid_argument("power node voltage bounds invalid");
      if (n.load_pu.p < 0.0 || n.load_pu.q < 0.0)
        throw std::invalid_argument("negative power node load");
    }
    for (const auto& b : branches) {
      if (!(b.r_pu > 0.0)) throw std::invalid_argument("branch resistance must be positive");
      if (b.x_pu < 0.0) throw std::invalid_argument("branch reactance must be non-negative");
      if (!(b.current_sq_limit_pu > 0.0)) throw std::invalid_argument("branch current limit must be positive");
    }
    if (!find_node(slack_id)) throw std::invalid_argument("slack node missing");
    if (!is_radial()) throw std::invalid_argument("topology not radial");
  }
};

struct EconomicParams {
  double station_cost = 200000.0;         // f_s per station, USD
  double pile_cost = 25000.0;             // f_c per pile, USD
  double line_cost_per_mile = 390000.0;   // USD/mile of new coupling line
  double loss_hours_per_day = 15.0;       // hours of peak-equivalent loss per day
  double planning_days = 3650.0;          // planning horizon, days
  double electricity_price = 0.20;        // USD/kWh

  double loss_hours_total() const { return loss_hours_per_day * planning_days; }

  void validate() const {
    if (!(station_cost > 0) || !(pile_cost > 0) || !(line_cost_per_mile > 0) ||
        !(loss_hours_per_day > 0) || !(planning_days > 0) || !(electricity_price > 0))
      throw std::invalid_argument("economic parameters must be strictly positive");
  }
};

struct BatteryPolicy {
  double soc_init = 0.1;  // theta_0
  double soc_min = 0.1;   // theta^l
  double soc_max = 0.9;   // theta^u
  int big_m = 45;         // pile-count bound per station

  void validate() const {
    if (!(0.0 <= soc_min && soc_min <= soc_init && soc_init <= soc_max && soc_max <= 1.0))
      throw std::invalid_argument("battery SOC bounds must satisfy 0 <= min <= init <= max <= 1");
    if (big_m < 1) throw std::invalid_argument("pile bound must be a positive integer");
  }
};

}  // namespace chargeplan
