#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "chargeplan/fairness.hpp"

using namespace chargeplan;

namespace {

/// Two closed routes with known link lengths; coordinates only matter for the
/// polygon tests, which build their own network.
TransitNetwork two_route_net() {
  TransitNetwork net;
  net.stops = {{"a", "a", 47.00, -122.30},
               {"b", "b", 47.02, -122.30},
               {"c", "c", 47.00, -122.20},
               {"d", "d", 47.02, -122.20}};
  BusRoute ra;
  ra.id = "RA";
  ra.stops = {"a", "b", "a"};
  ra.link_distances = {2.0, 2.0};
  BusRoute rb;
  rb.id = "RB";
  rb.stops = {"c", "d", "c"};
  rb.link_distances = {1.0, 3.0};
  net.routes = {ra, rb};
  return net;
}

ZonePartition two_zone_partition() {
  ZonePartition part;
  part.zone_names = {"north", "south"};
  part.link_weights[{"RA", 0}] = {{"north", 1.0}};
  part.link_weights[{"RA", 1}] = {{"north", 0.5}, {"south", 0.5}};
  part.link_weights[{"RB", 0}] = {{"south", 1.0}};
  part.link_weights[{"RB", 1}] = {{kOutsideZone, 0.25}, {"south", 0.75}};
  return part;
}

std::string temp_file(const std::string& name, const std::string& body) {
  const auto p = std::filesystem::temp_directory_path() / name;
  std::ofstream out(p);
  out << body;
  return p.string();
}

std::vector<GeoPoint> rect(double lat0, double lon0, double lat1, double lon1) {
  return {{lat0, lon0}, {lat0, lon1}, {lat1, lon1}, {lat1, lon0}};
}

}  // namespace

TEST_CASE("index of a known two-zone split") {
  CHECK(jain_index({0.4, 0.2}) == doctest::Approx(0.9).epsilon(1e-12));
}

TEST_CASE("uniform service earns a perfect index") {
  CHECK(jain_index({0.37, 0.37, 0.37, 0.37}) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(jain_index({0.7}) == doctest::Approx(1.0));
}

TEST_CASE("serving one zone of H scores exactly 1/H") {
  CHECK(jain_index({0.5, 0.0, 0.0, 0.0}) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(jain_index({0.5}, 4) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("degenerate index inputs are rejected") {
  CHECK_THROWS_WITH_AS(jain_index({0.0, 0.0}), "undefined index", std::invalid_argument);
  CHECK_THROWS_AS(jain_index({0.5}, 0), std::invalid_argument);
  CHECK_THROWS_AS(jain_index({0.5, -0.1}), std::invalid_argument);
}

TEST_CASE("random vectors stay within the bounds and the index ignores scale") {
  std::mt19937 rng(424242);
  std::uniform_real_distribution<double> val(0.01, 1.0);
  std::uniform_int_distribution<int> dim(1, 8);
  std::uniform_real_distribution<double> scale_log(-6.0, 6.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const int h = dim(rng);
    std::vector<double> w(h);
    for (double& x : w) x = val(rng);
    const double j = jain_index(w);
    CHECK(j >= 1.0 / h - 1e-12);
    CHECK(j <= 1.0 + 1e-12);
    const double k = std::pow(10.0, scale_log(rng));
    std::vector<double> scaled = w;
    for (double& x : scaled) x *= k;
    CHECK(std::abs(jain_index(scaled) - j) <= 1e-12);
  }
}

TEST_CASE("denominators count every route, selected or not") {
  const TransitNetwork net = two_route_net();
  const ZonePartition part = two_zone_partition();
  part.validate();
  const ZoneMiles d = zone_denominators(net, part);
  REQUIRE(d.miles.size() == 2);
  CHECK(d.miles[0] == doctest::Approx(3.0).epsilon(1e-12));   // north: 2 + 0.5*2
  CHECK(d.miles[1] == doctest::Approx(4.25).epsilon(1e-12));  // south: 1 + 1 + 0.75*3
  CHECK(d.outside_miles == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("ratios divide selected miles by the zone totals") {
  const TransitNetwork net = two_route_net();
  const ZonePartition part = two_zone_partition();
  const std::vector<double> w = zone_ratios({"RA"}, net, part);
  REQUIRE(w.size() == 2);
  CHECK(w[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(w[1] == doctest::Approx(1.0 / 4.25).epsilon(1e-12));

  const std::vector<double> all = zone_ratios({"RA", "RB"}, net, part);
  CHECK(all[0] == doctest::Approx(1.0));
  CHECK(all[1] == doctest::Approx(1.0));

  const std::vector<double> none = zone_ratios({}, net, part);
  CHECK(none == std::vector<double>{0.0, 0.0});
}

TEST_CASE("partition gaps and empty zones are reported by name") {
  const TransitNetwork net = two_route_net();
  ZonePartition holey = two_zone_partition();
  holey.link_weights.erase({"RB", 1});
  CHECK_THROWS_WITH_AS(zone_denominators(net, holey),
                       "zone partition does not cover route RB link 1", std::invalid_argument);

  ZonePartition ghost = two_zone_partition();
  ghost.zone_names.push_back("ghost");
  CHECK_THROWS_WITH_AS(zone_ratios({"RA"}, net, ghost), "empty zone ghost", std::invalid_argument);
}

TEST_CASE("partition validation rejects malformed weights") {
  ZonePartition part = two_zone_partition();
  part.link_weights[{"RA", 0}] = {{"north", 0.9}};  // sums to 0.9
  CHECK_THROWS_AS(part.validate(), std::invalid_argument);

  part = two_zone_partition();
  part.link_weights[{"RA", 0}] = {{"north", 1.5}, {"south", -0.5}};
  CHECK_THROWS_AS(part.validate(), std::invalid_argument);

  part = two_zone_partition();
  part.link_weights[{"RA", 0}] = {{"mars", 1.0}};
  CHECK_THROWS_AS(part.validate(), std::invalid_argument);

  part = two_zone_partition();
  part.zone_names = {"north"};
  CHECK_THROWS_AS(part.validate(), std::invalid_argument);
}

TEST_CASE("point location works for convex and concave polygons") {
  const auto square = rect(47.0, -122.4, 47.1, -122.3);
  CHECK(point_in_polygon({47.05, -122.35}, square));
  CHECK(!point_in_polygon({47.05, -122.25}, square));
  CHECK(!point_in_polygon({47.15, -122.35}, square));

  // C-shape opening east: two bars joined by a western spine.
  const std::vector<GeoPoint> cee = {{47.000, -122.00}, {47.000, -121.80}, {47.004, -121.80},
                                     {47.004, -121.96}, {47.016, -121.96}, {47.016, -121.80},
                                     {47.020, -121.80}, {47.020, -122.00}};
  CHECK(point_in_polygon({47.018, -121.85}, cee));   // top bar
  CHECK(point_in_polygon({47.002, -121.85}, cee));   // bottom bar
  CHECK(point_in_polygon({47.010, -121.97}, cee));   // spine
  CHECK(!point_in_polygon({47.010, -121.85}, cee));  // the notch
}

TEST_CASE("links map to zones by midpoint, split endpoints, or outside") {
  TransitNetwork net;
  net.stops = {{"m0", "m0", 47.02, -122.35},
               {"m1", "m1", 47.05, -122.35},
               {"m2", "m2", 47.05, -122.25},
               {"m3", "m3", 47.05, -122.12}};
  BusRoute rp;
  rp.id = "RP";
  rp.stops = {"m0", "m1", "m2", "m3", "m2", "m1", "m0"};
  rp.link_distances = {1.0, 1.0, 1.0, 1.0, 1.0, 1.0};
  net.routes = {rp};

  const std::vector<ZonePolygon> polys = {{"west", rect(47.0, -122.4, 47.1, -122.3)},
                                          {"east", rect(47.0, -122.3, 47.1, -122.2)}};
  const ZonePartition part = partition_from_polygons(net, polys);
  CHECK(part.zone_names == std::vector<std::string>{"west", "east"});

  const auto& l0 = part.link_weights.at({"RP", 0});
  REQUIRE(l0.size() == 1);
  CHECK(l0[0].zone == "west");

  const auto& l1 = part.link_weights.at({"RP", 1});  // endpoints in different zones
  REQUIRE(l1.size() == 2);
  CHECK(l1[0].zone == "west");
  CHECK(l1[0].weight == doctest::Approx(0.5));
  CHECK(l1[1].zone == "east");

  const auto& l2 = part.link_weights.at({"RP", 2});  // leaves the declared zones
  REQUIRE(l2.size() == 1);
  CHECK(l2[0].zone == kOutsideZone);

  const ZoneMiles d = zone_denominators(net, part);
  CHECK(d.miles[0] == doctest::Approx(3.0));  // west: 1 + 0.5 + 0.5 + 1
  CHECK(d.miles[1] == doctest::Approx(1.0));
  CHECK(d.outside_miles == doctest::Approx(2.0));
}

TEST_CASE("a concave zone claims a link whose midpoint escapes it") {
  TransitNetwork net;
  net.stops = {{"top", "top", 47.018, -121.85}, {"bot", "bot", 47.002, -121.85}};
  BusRoute r;
  r.id = "RC";
  r.stops = {"top", "bot", "top"};
  r.link_distances = {1.0, 1.0};
  net.routes = {r};

  const std::vector<ZonePolygon> polys = {
      {"cee",
       {{47.000, -122.00},
        {47.000, -121.80},
        {47.004, -121.80},
        {47.004, -121.96},
        {47.016, -121.96},
        {47.016, -121.80},
        {47.020, -121.80},
        {47.020, -122.00}}},
      {"elsewhere", rect(40.0, -100.1, 40.1, -100.0)}};
  const ZonePartition part = partition_from_polygons(net, polys);
  const auto& w = part.link_weights.at({"RC", 0});
  REQUIRE(w.size() == 1);
  CHECK(w[0].zone == "cee");  // both endpoints inside, so the zone keeps the link
  CHECK(w[0].weight == doctest::Approx(1.0));
}

TEST_CASE("zone files accept explicit weights") {
  const TransitNetwork net = two_route_net();
  const std::string path = temp_file("zones_weights.csv",
                                     "# route,link,zone,weight\n"
                                     "RA,0,north,1\n"
                                     "RA,1,north,0.5\n"
                                     "RA,1,south,0.5\n"
                                     "RB,0,south,1\n"
                                     "RB,1,outside,0.25\n"
                                     "RB,1,south,0.75\n");
  const ZonePartition part = load_zone_partition(path, net);
  CHECK(part.zone_names == std::vector<std::string>{"north", "south"});
  const ZoneMiles d = zone_denominators(net, part);
  CHECK(d.miles[0] == doctest::Approx(3.0));
  CHECK(d.miles[1] == doctest::Approx(4.25));
  CHECK(d.outside_miles == doctest::Approx(0.75));
}

TEST_CASE("zone files accept polygon rows") {
  TransitNetwork net;
  net.stops = {{"m0", "m0", 47.02, -122.35}, {"m1", "m1", 47.05, -122.35}};
  BusRoute r;
  r.id = "RP";
  r.stops = {"m0", "m1", "m0"};
  r.link_distances = {1.0, 1.0};
  net.routes = {r};
  const std::string path =
      temp_file("zones_polys.csv",
                "west,47.0,-122.4,47.0,-122.3,47.1,-122.3,47.1,-122.4\n"
                "east,47.0,-122.3,47.0,-122.2,47.1,-122.2,47.1,-122.3\n");
  const ZonePartition part = load_zone_partition(path, net);
  CHECK(part.zone_names == std::vector<std::string>{"west", "east"});
  CHECK(part.link_weights.at({"RP", 0})[0].zone == "west");
}

TEST_CASE("malformed zone files are rejected") {
  const TransitNetwork net = two_route_net();
  CHECK_THROWS(load_zone_partition("/nonexistent/zones.csv", net));
  CHECK_THROWS(load_zone_partition(temp_file("zones_empty.csv", "# nothing\n"), net));
  CHECK_THROWS(load_zone_partition(temp_file("zones_shortpoly.csv", "z,47,-122,47.1,-122\n"), net));
  CHECK_THROWS(load_zone_partition(
      temp_file("zones_mixed.csv", "RA,0,north,1\nz,47,-122,47,-121,48,-121,48,-122\n"), net));
}
