#include <doctest.h>

#include "chargeplan/net.hpp"
#include "fixtures.hpp"

using namespace chargeplan;
using chargeplan::testing::make_route;

TEST_CASE("coach defaults match the two fleet classes") {
  const CoachSpec forty = coach_defaults(CoachClass::FortyFoot);
  CHECK(forty.battery_kwh == 313.0);
  CHECK(forty.consumption_kwh_per_mile == 1.99);
  CHECK(forty.charger_kw == 150.0);
  const CoachSpec sixty = coach_defaults(CoachClass::SixtyFoot);
  CHECK(sixty.battery_kwh == 578.0);
  CHECK(sixty.consumption_kwh_per_mile == 3.74);
  CHECK(sixty.charger_kw == 200.0);
}

TEST_CASE("round-trip length is the sum of link distances") {
  CHECK(route_roundtrip_miles(make_route("a", 13.82, false)) == doctest::Approx(13.82));
  CHECK(route_roundtrip_miles(make_route("b", 52.34, true)) == doctest::Approx(52.34));
}

TEST_CASE("degenerate routes are rejected with the documented message") {
  BusRoute r;
  r.id = "r";
  CHECK_THROWS_WITH_AS(route_roundtrip_miles(r), "degenerate route", std::invalid_argument);
  r.stops = {"s1"};
  CHECK_THROWS_WITH_AS(r.validate(), "degenerate route", std::invalid_argument);
}

TEST_CASE("route validation enforces closure and positive links") {
  BusRoute r = make_route("r", 10.0, false);

  SUBCASE("valid as constructed") { CHECK_NOTHROW(r.validate()); }
  SUBCASE("open path") {
    r.stops.back() = "elsewhere";
    CHECK_THROWS_AS(r.validate(), std::invalid_argument);
  }
  SUBCASE("link and stop counts must agree") {
    r.link_distances.push_back(1.0);
    CHECK_THROWS_AS(r.validate(), std::invalid_argument);
  }
  SUBCASE("zero-length link") {
    r.link_distances[0] = 0.0;
    CHECK_THROWS_AS(r.validate(), std::invalid_argument);
  }
  SUBCASE("negative dwell") {
    r.dwell_hours_default = -0.1;
    CHECK_THROWS_AS(r.validate(), std::invalid_argument);
  }
}

TEST_CASE("per-stop dwell overrides fall back to the default") {
  BusRoute r = make_route("r", 10.0, false);
  r.dwell_hours_default = 0.2;
  r.dwell_hours_override[r.stops[1]] = 0.5;
  CHECK(r.dwell_hours_at(r.stops[1]) == 0.5);
  CHECK(r.dwell_hours_at(r.stops[0]) == 0.2);
}

TEST_CASE("network validation catches broken references") {
  TransitNetwork net;
  net.stops = {{"s1", "one", 47.0, -122.0}, {"s2", "two", 47.1, -122.0}};
  BusRoute r = make_route("r", 4.0, false);
  r.stops = {"s1", "s2", "s1"};
  net.routes = {r};

  SUBCASE("valid as constructed") { CHECK_NOTHROW(net.validate()); }
  SUBCASE("duplicate stop ids") {
    net.stops.push_back({"s1", "dup", 47.2, -122.0});
    CHECK_THROWS_AS(net.validate(), std::invalid_argument);
  }
  SUBCASE("route over an unknown stop") {
    net.routes[0].stops = {"s1", "ghost", "s1"};
    CHECK_THROWS_AS(net.validate(), std::invalid_argument);
  }
  SUBCASE("candidate that is not a stop") {
    net.candidate_nodes = {"ghost"};
    CHECK_THROWS_AS(net.validate(), std::invalid_argument);
  }
  SUBCASE("latitude out of range") {
    net.stops[0].lat = 91.0;
    CHECK_THROWS_AS(net.validate(), std::invalid_argument);
  }
}

TEST_CASE("grid validation requires a radial tree rooted at a real slack") {
  PowerGrid g;
  g.nodes = {{1, "", 47.0, -122.0, {}}, {2, "", 47.1, -122.0, {}}, {3, "", 47.2, -122.0, {}}};
  g.branches = {{1, 2, 0.01, 0.02, 1.0, 1.0}, {2, 3, 0.01, 0.02, 1.0, 1.0}};
  g.slack_id = 1;

  SUBCASE("valid as constructed") { CHECK_NOTHROW(g.validate()); }
  SUBCASE("a cycle is not radial") {
    g.branches.push_back({3, 1, 0.01, 0.02, 1.0, 1.0});
    CHECK_THROWS_WITH_AS(g.validate(), "topology not radial", std::invalid_argument);
  }
  SUBCASE("a disconnected node is not radial") {
    g.branches.pop_back();
    CHECK_THROWS_WITH_AS(g.validate(), "topology not radial", std::invalid_argument);
  }
  SUBCASE("slack must exist") {
    g.slack_id = 99;
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
  }
  SUBCASE("resistance must be positive") {
    g.branches[0].r_pu = 0.0;
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
  }
  SUBCASE("voltage window must be ordered") {
    g.nodes[1].vmin_sq_pu = 1.2;
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
  }
}

TEST_CASE("battery policy bounds are ordered fractions") {
  BatteryPolicy p;
  CHECK_NOTHROW(p.validate());
  p.soc_init = 0.05;  // below the floor
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = BatteryPolicy{};
  p.big_m = 0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("economic defaults match the documented cost model") {
  const EconomicParams e;
  CHECK(e.station_cost == 200000.0);
  CHECK(e.pile_cost == 25000.0);
  CHECK(e.line_cost_per_mile == 390000.0);
  CHECK(e.electricity_price == 0.20);
  CHECK(e.loss_hours_total() == doctest::Approx(15.0 * 3650.0));
  EconomicParams bad = e;
  bad.pile_cost = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
