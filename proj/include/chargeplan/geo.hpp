#pragma once

#include <cmath>

namespace chargeplan {

/// WGS84 latitude/longitude pair, degrees.
struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;
};

inline constexpr double kEarthRadiusMiles = 3958.7613;
inline constexpr double kFeetPerMile = 5280.0;
inline constexpr double kKmPerMile = 1.609344;

inline double deg2rad(double deg) { return deg * 3.14159265358979323846 / 180.0; }

/// Great-circle (haversine) distance in miles.
inline double geodesic_miles(const GeoPoint& a, const GeoPoint& b) {
  const double lat1 = deg2rad(a.lat);
  const double lat2 = deg2rad(b.lat);
  const double dlat = lat2 - lat1;
  const double dlon = deg2rad(b.lon - a.lon);
  const double sl = std::sin(dlat / 2.0);
  const double so = std::sin(dlon / 2.0);
  const double h = sl * sl + std::cos(lat1) * std::cos(lat2) * so * so;
  return 2.0 * kEarthRadiusMiles * std::asin(std::min(1.0, std::sqrt(h)));
}

inline double geodesic_km(const GeoPoint& a, const GeoPoint& b) {
  return geodesic_miles(a, b) * kKmPerMile;
}

}  // namespace chargeplan
