#pragma once

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "chargeplan/net.hpp"

namespace chargeplan {

/// Synthetic zone id for links outside every declared zone; excluded from H.
inline const std::string kOutsideZone = "outside";

struct ZoneWeight {
  std::string zone;
  double weight = 0.0;
};

/// Assignment of route links to geographic zones with fractional weights.
struct ZonePartition {
  std::vector<std::string> zone_names;  // the H declared zones, report order
  std::map<std::pair<RouteId, int>, std::vector<ZoneWeight>> link_weights;

  int zone_count() const { return static_cast<int>(zone_names.size()); }
  int zone_index(const std::string& name) const;  // -1 for outside/unknown
  void validate() const;
};

struct ZoneMiles {
  std::vector<double> miles;   // aligned with ZonePartition::zone_names
  double outside_miles = 0.0;  // route length falling in no declared zone
};

/// D_h: total route miles per zone (every route counted, selected or not).
ZoneMiles zone_denominators(const TransitNetwork& net, const ZonePartition& part);

/// w_h: miles of selected routes in zone h divided by D_h.
std::vector<double> zone_ratios(const std::set<RouteId>& selected, const TransitNetwork& net,
                                const ZonePartition& part);

/// Jain's fairness index (sum w)^2 / (H * sum w^2), in [1/H, 1].
double jain_index(const std::vector<double>& w, int H);
inline double jain_index(const std::vector<double>& w) {
  return jain_index(w, static_cast<int>(w.size()));
}

/// Convex polygon not required; any simple polygon, vertices in order.
struct ZonePolygon {
  std::string zone;
  std::vector<GeoPoint> vertices;
};

bool point_in_polygon(const GeoPoint& p, const std::vector<GeoPoint>& poly);

/// Builds a partition from polygons: a link goes to the zone containing its
/// midpoint, except when its endpoints sit in two different zones, in which
/// case it is split 50/50 between them. Links outside every polygon map to
/// the synthetic outside zone.
ZonePartition partition_from_polygons(const TransitNetwork& net,
                                      const std::vector<ZonePolygon>& polys);

/// Reads a zone file. Two row shapes are accepted:
///   route_id,link_index,zone_id,weight      (explicit link weights)
///   zone_id,lat1,lon1,lat2,lon2,lat3,lon3[,...]   (polygon rows)
/// A file must use one shape throughout; polygon files need `net` to place links.
ZonePartition load_zone_partition(const std::string& path, const TransitNetwork& net);

}  // namespace chargeplan
