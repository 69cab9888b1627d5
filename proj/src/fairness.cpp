#include "chargeplan/fairness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace chargeplan {

int ZonePartition::zone_index(const std::string& name) const {
  for (size_t i = 0; i < zone_names.size(); ++i)
    if (zone_names[i] == name) return static_cast<int>(i);
  return -1;
}

void ZonePartition::validate() const {
  if (zone_count() < 2) throw std::invalid_argument("zone partition needs at least two zones");
  for (const auto& [key, weights] : link_weights) {
    double total = 0.0;
    for (const auto& zw : weights) {
      if (zw.weight < 0.0)
        throw std::invalid_argument("negative zone weight on route " + key.first + " link " +
                                    std::to_string(key.second));
      if (zw.zone != kOutsideZone && zone_index(zw.zone) < 0)
        throw std::invalid_argument("unknown zone " + zw.zone);
      total += zw.weight;
    }
    if (std::abs(total - 1.0) > 1e-9)
      throw std::invalid_argument("zone weights for route " + key.first + " link " +
                                  std::to_string(key.second) + " do not sum to 1");
  }
}

namespace {

ZoneMiles accumulate_zone_miles(const std::set<RouteId>* selected, const TransitNetwork& net,
                                const ZonePartition& part) {
  ZoneMiles out;
  out.miles.assign(part.zone_names.size(), 0.0);
  for (const auto& route : net.routes) {
    if (selected && !selected->count(route.id)) continue;
    for (size_t l = 0; l < route.link_distances.size(); ++l) {
      auto it = part.link_weights.find({route.id, static_cast<int>(l)});
      if (it == part.link_weights.end())
        throw std::invalid_argument("zone partition does not cover route " + route.id + " link " +
                                    std::to_string(l));
      for (const auto& zw : it->second) {
        const double miles = zw.weight * route.link_distances[l];
        const int h = part.zone_index(zw.zone);
        if (h >= 0)
          out.miles[h] += miles;
        else
          out.outside_miles += miles;
      }
    }
  }
  return out;
}

}  // namespace

ZoneMiles zone_denominators(const TransitNetwork& net, const ZonePartition& part) {
  return accumulate_zone_miles(nullptr, net, part);
}

std::vector<double> zone_ratios(const std::set<RouteId>& selected, const TransitNetwork& net,
                                const ZonePartition& part) {
  const ZoneMiles den = zone_denominators(net, part);
  const ZoneMiles num = accumulate_zone_miles(&selected, net, part);
  std::vector<double> w(den.miles.size(), 0.0);
  for (size_t h = 0; h < den.miles.size(); ++h) {
    if (!(den.miles[h] > 0.0)) throw std::invalid_argument("empty zone " + part.zone_names[h]);
    w[h] = num.miles[h] / den.miles[h];
  }
  return w;
}

double jain_index(const std::vector<double>& w, int H) {
  if (H < 1) throw std::invalid_argument("jain index needs H >= 1");
  double sum = 0.0, sumsq = 0.0;
  for (double x : w) {
    if (x < 0.0) throw std::invalid_argument("jain index needs non-negative inputs");
    sum += x;
    sumsq += x * x;
  }
  if (sumsq == 0.0) throw std::invalid_argument("undefined index");
  return sum * sum / (H * sumsq);
}

bool point_in_polygon(const GeoPoint& p, const std::vector<GeoPoint>& poly) {
  // Ray casting in (lon, lat) coordinates; adequate at metro scale.
  bool inside = false;
  const size_t n = poly.size();
  for (size_t i = 0, j = n - 1; i < n; j = i++) {
    const double xi = poly[i].lon, yi = poly[i].lat;
    const double xj = poly[j].lon, yj = poly[j].lat;
    const bool crosses = (yi > p.lat) != (yj > p.lat);
    if (crosses && p.lon < (xj - xi) * (p.lat - yi) / (yj - yi) + xi) inside = !inside;
  }
  return inside;
}

namespace {

std::string zone_of_point(const GeoPoint& p, const std::vector<ZonePolygon>& polys) {
  for (const auto& zp : polys)
    if (point_in_polygon(p, zp.vertices)) return zp.zone;
  return kOutsideZone;
}

}  // namespace

ZonePartition partition_from_polygons(const TransitNetwork& net,
                                      const std::vector<ZonePolygon>& polys) {
  ZonePartition part;
  for (const auto& zp : polys)
    if (part.zone_index(zp.zone) < 0 && zp.zone != kOutsideZone) part.zone_names.push_back(zp.zone);
  for (const auto& route : net.routes) {
    for (size_t l = 0; l < route.link_distances.size(); ++l) {
      const BusStop* a = net.find_stop(route.stops[l]);
      const BusStop* b = net.find_stop(route.stops[l + 1]);
      if (!a || !b) throw std::invalid_argument("route " + route.id + " references unknown stop");
      const std::string za = zone_of_point(a->point(), polys);
      const std::string zb = zone_of_point(b->point(), polys);
      std::vector<ZoneWeight>& w = part.link_weights[{route.id, static_cast<int>(l)}];
      if (za != kOutsideZone && zb != kOutsideZone && za != zb) {
        w.push_back({za, 0.5});
        w.push_back({zb, 0.5});
      } else {
        const GeoPoint mid{0.5 * (a->lat + b->lat), 0.5 * (a->lon + b->lon)};
        std::string zm = zone_of_point(mid, polys);
        if (zm == kOutsideZone && za == zb && za != kOutsideZone) zm = za;
        w.push_back({zm, 1.0});
      }
    }
  }
  return part;
}

ZonePartition load_zone_partition(const std::string& path, const TransitNetwork& net) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open zone file " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (!fields.empty()) rows.push_back(std::move(fields));
  }
  if (rows.empty()) throw std::runtime_error("zone file " + path + " is empty");

  const bool polygon_shape = rows.front().size() > 4 || rows.front().size() % 2 == 1;
  if (polygon_shape) {
    std::vector<ZonePolygon> polys;
    for (const auto& r : rows) {
      if (r.size() < 7 || r.size() % 2 == 0)
        throw std::runtime_error("zone polygon row needs zone_id plus >= 3 lat,lon pairs");
      ZonePolygon zp;
      zp.zone = r[0];
      for (size_t i = 1; i + 1 < r.size(); i += 2)
        zp.vertices.push_back({std::stod(r[i]), std::stod(r[i + 1])});
      polys.push_back(std::move(zp));
    }
    return partition_from_polygons(net, polys);
  }

  ZonePartition part;
  for (const auto& r : rows) {
    if (r.size() != 4) throw std::runtime_error("zone weight row needs route,link,zone,weight");
    const RouteId route = r[0];
    const int link = std::stoi(r[1]);
    const std::string zone = r[2];
    const double weight = std::stod(r[3]);
    if (zone != kOutsideZone && part.zone_index(zone) < 0) part.zone_names.push_back(zone);
    part.link_weights[{route, link}].push_back({zone, weight});
  }
  return part;
}

}  // namespace chargeplan
