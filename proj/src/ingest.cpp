#include "chargeplan/ingest.hpp"

#include <algorithm>
#include <filesystem>
#include <map>
#include <stdexcept>

#include "chargeplan/csv.hpp"

namespace chargeplan {

namespace {

std::optional<double> parse_opt(const std::vector<std::string>& row, int col) {
  if (col < 0 || col >= static_cast<int>(row.size()) || row[col].empty()) return std::nullopt;
  return std::stod(row[col]);
}

std::string table_path(const std::string& dir, const std::string& name) {
  namespace fs = std::filesystem;
  for (const auto& candidate : {dir + "/" + name + ".txt", dir + "/" + name})
    if (fs::exists(candidate)) return candidate;
  throw std::runtime_error("feed table " + name + " not found in " + dir);
}

}  // namespace

void FeedTables::validate() const {
  std::set<std::string> stop_ids;
  for (const auto& s : stops) stop_ids.insert(s.stop_id);
  std::map<std::string, int> last_seq;
  for (const auto& st : stop_times) {
    if (!stop_ids.count(st.stop_id))
      throw std::invalid_argument("unresolvable stop " + st.stop_id);
    auto it = last_seq.find(st.trip_id);
    if (it != last_seq.end() && st.stop_sequence <= it->second)
      throw std::invalid_argument("trip " + st.trip_id + ": stop_sequence not strictly increasing");
    last_seq[st.trip_id] = st.stop_sequence;
  }
}

FeedTables load_feed(const std::string& dir) {
  FeedTables feed;
  {
    const CsvTable t = CsvTable::read(table_path(dir, "stops"));
    const int id = t.require_col("stop_id"), name = t.col("stop_name");
    const int lat = t.col("stop_lat"), lon = t.col("stop_lon");
    for (const auto& r : t.rows)
      feed.stops.push_back({r[id], name >= 0 && name < static_cast<int>(r.size()) ? r[name] : "",
                            parse_opt(r, lat), parse_opt(r, lon)});
  }
  {
    const CsvTable t = CsvTable::read(table_path(dir, "trips"));
    const int route = t.require_col("route_id"), trip = t.require_col("trip_id");
    const int dir_col = t.col("direction_id");
    for (const auto& r : t.rows) {
      int d = 0;
      if (dir_col >= 0 && dir_col < static_cast<int>(r.size()) && !r[dir_col].empty())
        d = std::stoi(r[dir_col]);
      feed.trips.push_back({r[route], r[trip], d});
    }
  }
  {
    const CsvTable t = CsvTable::read(table_path(dir, "stop_times"));
    const int trip = t.require_col("trip_id"), seq = t.require_col("stop_sequence");
    const int stop = t.require_col("stop_id"), dist = t.col("shape_dist_traveled");
    for (const auto& r : t.rows)
      feed.stop_times.push_back({r[trip], std::stoi(r[seq]), r[stop], parse_opt(r, dist)});
  }
  return feed;
}

namespace {

struct TripPath {
  std::vector<StopId> stops;
  std::vector<double> cum_miles;
};

TripPath trip_path(const FeedTables& feed, const std::string& trip_id,
                   const std::map<StopId, const StopRow*>& stop_index) {
  std::vector<const StopTimeRow*> rows;
  for (const auto& st : feed.stop_times)
    if (st.trip_id == trip_id) rows.push_back(&st);
  std::sort(rows.begin(), rows.end(),
            [](const StopTimeRow* a, const StopTimeRow* b) { return a->stop_sequence < b->stop_sequence; });
  if (rows.size() < 2) throw std::invalid_argument("trip " + trip_id + " has fewer than 2 stops");

  TripPath path;
  bool all_dist = true;
  for (const auto* r : rows) all_dist = all_dist && r->shape_dist_traveled_ft.has_value();
  double cum = 0.0;
  for (size_t i = 0; i < rows.size(); ++i) {
    const auto it = stop_index.find(rows[i]->stop_id);
    if (it == stop_index.end() || !it->second->lat || !it->second->lon)
      throw std::invalid_argument("unresolvable stop " + rows[i]->stop_id);
    path.stops.push_back(rows[i]->stop_id);
    if (i == 0) {
      path.cum_miles.push_back(0.0);
      continue;
    }
    if (all_dist) {
      cum = (*rows[i]->shape_dist_traveled_ft - *rows[0]->shape_dist_traveled_ft) / kFeetPerMile;
    } else {
      const StopRow* a = stop_index.at(rows[i - 1]->stop_id);
      const StopRow* b = it->second;
      cum += geodesic_miles({*a->lat, *a->lon}, {*b->lat, *b->lon});
    }
    path.cum_miles.push_back(cum);
  }
  return path;
}

// Links must have positive length; coincident consecutive stops get a floor.
constexpr double kMinLinkMiles = 1e-3;

void append_path(BusRoute& route, const TripPath& path,
                 const std::map<StopId, const StopRow*>& stop_index) {
  size_t start = 0;
  if (!route.stops.empty()) {
    if (route.stops.back() == path.stops.front()) {
      start = 1;
    } else {
      // Bridge a gap between directions with a direct geodesic link.
      const StopRow* a = stop_index.at(route.stops.back());
      const StopRow* b = stop_index.at(path.stops.front());
      route.stops.push_back(path.stops.front());
      route.link_distances.push_back(
          std::max(kMinLinkMiles, geodesic_miles({*a->lat, *a->lon}, {*b->lat, *b->lon})));
      start = 1;
    }
  } else {
    route.stops.push_back(path.stops.front());
    start = 1;
  }
  for (size_t i = start; i < path.stops.size(); ++i) {
    route.stops.push_back(path.stops[i]);
    route.link_distances.push_back(
        std::max(kMinLinkMiles, path.cum_miles[i] - path.cum_miles[i - 1]));
  }
}

}  // namespace

TransitNetwork build_routes(const FeedTables& feed, const SelectionConfig& cfg) {
  feed.validate();
  std::map<StopId, const StopRow*> stop_index;
  for (const auto& s : feed.stops) stop_index[s.stop_id] = &s;

  std::vector<RouteId> wanted = cfg.route_filter;
  if (std::find(wanted.begin(), wanted.end(), "*") != wanted.end()) {
    std::set<RouteId> all;
    for (const auto& t : feed.trips) all.insert(t.route_id);
    wanted.assign(all.begin(), all.end());
  }

  TransitNetwork net;
  std::set<StopId> used_stops;
  for (const RouteId& rid : wanted) {
    // First trip per direction, lowest trip id, keeps assembly deterministic.
    std::map<int, std::string> trip_of_dir;
    for (const auto& t : feed.trips) {
      if (t.route_id != rid) continue;
      auto it = trip_of_dir.find(t.direction);
      if (it == trip_of_dir.end() || t.trip_id < it->second) trip_of_dir[t.direction] = t.trip_id;
    }
    if (trip_of_dir.empty()) throw std::invalid_argument("route " + rid + " not present in feed");

    BusRoute route;
    route.id = rid;
    std::vector<TripPath> paths;
    for (const auto& [dir, trip_id] : trip_of_dir) paths.push_back(trip_path(feed, trip_id, stop_index));
    append_path(route, paths.front(), stop_index);
    if (paths.size() >= 2) {
      append_path(route, paths[1], stop_index);
    } else {
      // Single direction: mirror the outbound path to close the round trip.
      TripPath back;
      back.stops.assign(paths[0].stops.rbegin(), paths[0].stops.rend());
      back.cum_miles.push_back(0.0);
      for (size_t i = paths[0].cum_miles.size(); i-- > 1;)
        back.cum_miles.push_back(back.cum_miles.back() +
                                 (paths[0].cum_miles[i] - paths[0].cum_miles[i - 1]));
      append_path(route, back, stop_index);
    }
    if (route.stops.back() != route.stops.front()) {
      const StopRow* a = stop_index.at(route.stops.back());
      const StopRow* b = stop_index.at(route.stops.front());
      route.stops.push_back(route.stops.front());
      route.link_distances.push_back(
          std::max(kMinLinkMiles, geodesic_miles({*a->lat, *a->lon}, {*b->lat, *b->lon})));
    }
    net.routes.push_back(std::move(route));
    for (const auto& sid : net.routes.back().stops) used_stops.insert(sid);
  }

  for (const auto& sid : used_stops) {
    const StopRow* s = stop_index.at(sid);
    net.stops.push_back({s->stop_id, s->name, *s->lat, *s->lon});
  }
  net.validate();
  return net;
}

std::set<StopId> select_transport_nodes(const TransitNetwork& net, const SelectionConfig& cfg) {
  const double threshold_miles = cfg.distance_threshold_ft / kFeetPerMile;
  std::set<StopId> selected;
  std::map<StopId, std::set<RouteId>> routes_of_stop;

  for (const auto& route : net.routes) {
    if (route.stops.empty()) continue;
    selected.insert(route.stops.front());
    selected.insert(route.stops.back());
    std::vector<double> cum{0.0};
    for (double d : route.link_distances) cum.push_back(cum.back() + d);
    double last_kept = 0.0;
    for (size_t k = 0; k < route.stops.size(); ++k) {
      routes_of_stop[route.stops[k]].insert(route.id);
      if (k == 0) continue;
      if (cum[k] > last_kept + threshold_miles) {
        if (cum[k] - cum[k - 1] > threshold_miles) {
          selected.insert(route.stops[k - 1]);
          selected.insert(route.stops[k]);
          last_kept = cum[k];
        } else {
          selected.insert(route.stops[k - 1]);
          last_kept = cum[k - 1];
        }
      }
    }
  }

  for (const auto& [sid, routes] : routes_of_stop)
    if (static_cast<int>(routes.size()) > cfg.common_stop_min_routes) selected.insert(sid);
  return selected;
}

}  // namespace chargeplan
