#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "chargeplan/net.hpp"

namespace chargeplan {

struct StopRow {
  std::string stop_id;
  std::string name;
  std::optional<double> lat, lon;
};

struct TripRow {
  std::string route_id;
  std::string trip_id;
  int direction = 0;
};

struct StopTimeRow {
  std::string trip_id;
  int stop_sequence = 0;
  std::string stop_id;
  std::optional<double> shape_dist_traveled_ft;
};

struct FeedTables {
  std::vector<StopRow> stops;
  std::vector<TripRow> trips;
  std::vector<StopTimeRow> stop_times;

  void validate() const;
};

struct SelectionConfig {
  double distance_threshold_ft = 40000.0;  // trigger for on-route node spacing
  int common_stop_min_routes = 3;          // a stop on more routes than this is kept
  std::vector<RouteId> route_filter;       // "*" expands to every route in the feed
};

/// Reads stops/trips/stop_times tables (with or without .txt suffix) from dir.
FeedTables load_feed(const std::string& dir);

/// Assembles one closed round-trip route per filtered route id. Distances use
/// shape_dist_traveled (feet) when present, otherwise stop-to-stop haversine.
/// Routes with a single direction are mirrored to close the loop.
TransitNetwork build_routes(const FeedTables& feed, const SelectionConfig& cfg);

/// Greedy on-route node selection: keeps every origin/terminal, inserts the
/// predecessor stop (and the stop itself on long gaps) whenever cumulative
/// distance since the last kept node exceeds the threshold, and keeps stops
/// shared by more than `common_stop_min_routes` distinct routes.
std::set<StopId> select_transport_nodes(const TransitNetwork& net, const SelectionConfig& cfg);

}  // namespace chargeplan
