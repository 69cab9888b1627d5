// Python bindings for the main planning operations.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

#include "chargeplan/fairness.hpp"
#include "chargeplan/geo.hpp"
#include "chargeplan/pipeline.hpp"

namespace py = pybind11;
using namespace chargeplan;

namespace {

py::dict station_dict(const StationPlan& st) {
  py::dict d;
  d["stop"] = st.stop;
  d["piles"] = st.piles;
  d["power_node"] = st.coupled_node;
  d["line_miles"] = st.line_miles;
  d["line_cost_usd"] = st.line_cost_usd;
  return d;
}

py::dict artifacts_dict(const RunArtifacts& art) {
  py::dict d;
  d["solved"] = art.solved;
  d["error"] = art.error;
  if (!art.solved) return d;
  const PlanSolution& sol = art.sol;
  d["status"] = sol.status == SolveStatus::Optimal ? "optimal" : "bound_limit";
  d["objective"] = sol.objective;
  d["best_bound"] = sol.best_bound;
  d["rel_gap"] = sol.rel_gap;
  d["node_count"] = sol.node_count;
  py::dict costs;
  costs["station"] = sol.station_cost;
  costs["pile"] = sol.pile_cost;
  costs["line"] = sol.line_cost;
  costs["loss"] = sol.loss_cost;
  costs["total"] = sol.station_cost + sol.pile_cost + sol.line_cost + sol.loss_cost;
  d["costs"] = costs;
  py::list stations;
  for (const auto& st : sol.stations) stations.append(station_dict(st));
  d["stations"] = stations;
  py::list routes;
  for (const auto& r : sol.selected_routes) routes.append(r);
  d["selected_routes"] = routes;
  if (sol.fairness_enabled) {
    d["zone_ratios"] = sol.w;
    d["jain_index"] = sol.jain;
  }
  d["validation_passed"] = art.report.passed();
  d["validation_text"] = art.report.to_text();
  return d;
}

BusRoute synthetic_route(const std::vector<double>& link_miles, double battery_kwh,
                         double kwh_per_mile, double charger_kw, double dwell_hours) {
  BusRoute r;
  r.id = "route";
  for (size_t i = 0; i <= link_miles.size(); ++i) r.stops.push_back("s" + std::to_string(i));
  r.stops.back() = r.stops.front();
  r.link_distances = link_miles;
  r.battery_kwh = battery_kwh;
  r.consumption_kwh_per_mile = kwh_per_mile;
  r.charger_kw = charger_kw;
  r.dwell_hours_default = dwell_hours;
  return r;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "On-route bus fast-charging planning over coupled transit and power networks";
  m.attr("__version__") = "1.0.0";

  m.def(
      "geodesic_miles",
      [](double lat1, double lon1, double lat2, double lon2) {
        return geodesic_miles({lat1, lon1}, {lat2, lon2});
      },
      py::arg("lat1"), py::arg("lon1"), py::arg("lat2"), py::arg("lon2"),
      "Great-circle distance in miles.");

  m.def(
      "jain_index",
      [](const std::vector<double>& weights, std::optional<int> zones) {
        return jain_index(weights, zones.value_or(static_cast<int>(weights.size())));
      },
      py::arg("weights"), py::arg("zones") = std::nullopt,
      "Fairness index (sum w)^2 / (H * sum w^2); 1 means perfectly even.");

  m.def(
      "min_charges",
      [](const std::vector<double>& link_miles, double battery_kwh, double kwh_per_mile,
         double charger_kw, double dwell_hours, double soc_init, double soc_min, double soc_max) {
        const BusRoute r =
            synthetic_route(link_miles, battery_kwh, kwh_per_mile, charger_kw, dwell_hours);
        BatteryPolicy policy;
        policy.soc_init = soc_init;
        policy.soc_min = soc_min;
        policy.soc_max = soc_max;
        return min_charges_oracle(r, policy);
      },
      py::arg("link_miles"), py::arg("battery_kwh"), py::arg("kwh_per_mile"),
      py::arg("charger_kw"), py::arg("dwell_hours") = 0.2, py::arg("soc_init") = 0.1,
      py::arg("soc_min") = 0.1, py::arg("soc_max") = 0.9,
      "Minimum full-power charge events for one round trip.");

  m.def(
      "plan",
      [](const std::string& config, const std::vector<std::string>& overrides, bool write_files) {
        return artifacts_dict(run_plan(RunConfig::load(config, overrides), write_files));
      },
      py::arg("config"), py::arg("overrides") = std::vector<std::string>{},
      py::arg("write_files") = true,
      "Solve one siting/sizing instance; returns a result dictionary.");

  m.def(
      "sweep",
      [](const std::string& config, const std::string& dimension,
         const std::vector<std::string>& overrides, bool write_files) {
        py::list rows;
        for (const auto& row : sweep(RunConfig::load(config, overrides), dimension, write_files)) {
          py::dict d;
          d["parameter"] = row.parameter;
          d["ok"] = row.ok;
          d["error"] = row.error;
          d["total_cost"] = row.total_cost;
          d["stations"] = row.stations;
          d["piles"] = row.piles;
          d["jain_index"] = row.jain;
          rows.append(d);
        }
        return rows;
      },
      py::arg("config"), py::arg("dimension"), py::arg("overrides") = std::vector<std::string>{},
      py::arg("write_files") = true, "Solve across a parameter list (soc_init or eta).");
}
