#pragma once

#include <map>
#include <string>
#include <vector>

#include "chargeplan/bnb.hpp"
#include "chargeplan/gridsynth.hpp"
#include "chargeplan/ingest.hpp"
#include "chargeplan/model.hpp"
#include "chargeplan/validate.hpp"

namespace chargeplan {

/// Layered key-value run configuration. Every planning constant is a key;
/// defaults match the documented baseline. Files use `key = value` lines with
/// `#` comments; later lines and command-line overrides win.
struct RunConfig {
  std::string feed_dir;            // paths.feed_dir
  std::string grid_override;       // paths.grid_override (optional)
  std::string zone_file;           // paths.zone_file (fairness runs)
  std::string output_dir = "out";  // paths.output_dir

  SelectionConfig selection;       // selection.*
  GridSynthConfig gridsynth;       // grid.*
  int coupling_k = 1;              // grid.coupling_k

  EconomicParams econ;             // econ.*
  BatteryPolicy battery;           // battery.*

  double dwell_hours = 0.2;            // routes.dwell_hours
  std::vector<RouteId> sixty_foot;     // routes.sixty_foot (comma list)

  bool fairness_enabled = false;   // fairness.enabled
  double fairness_eta = 0.9;       // fairness.eta
  int fairness_budget = 1;         // fairness.budget
  bool budget_is_equality = true;  // fairness.budget_equality

  BnBConfig solver;                // solver.*
  bool solver_log = false;         // solver.log

  std::vector<double> sweep_soc_init;  // sweep.soc_init
  std::vector<double> sweep_eta;       // sweep.eta

  /// Applies one dotted key; unknown keys raise.
  void apply(const std::string& key, const std::string& value);

  /// File (optional) then overrides ("key=value"), then CHARGEPLAN_WORKERS.
  static RunConfig load(const std::string& path, const std::vector<std::string>& overrides = {});

  void validate() const;
};

/// End-to-end network construction: feed -> routes -> candidate stops ->
/// synthesized (or overridden) grid -> coupling candidates -> zones.
PlanningInstance build_instance(const RunConfig& cfg);

/// Closed-form minimum number of full-power charge events for one round
/// trip: ceil of the net energy deficit over the per-dwell charge amount.
/// The deficit is quantized to 0.1 kWh before the ceiling, matching the
/// rated-figure convention used for published frequency tables.
/// Throws when any single link exceeds the usable battery window.
int min_charges_oracle(const BusRoute& route, const BatteryPolicy& policy);

/// One full planning run plus everything a caller might inspect.
struct RunArtifacts {
  bool solved = false;
  std::string error;  // structural or solver failure, empty when solved
  SolveResult raw;
  PlanSolution sol;           // valid when solved
  ValidationReport report;    // valid when solved
};

/// Builds, solves, validates, and (optionally) writes the report files:
/// stations.csv, charge_plan.csv, objective_breakdown.csv, result.json,
/// network.geojson, solver.log, validation.txt.
RunArtifacts run_plan(const RunConfig& cfg, bool write_files = true);

struct SweepRow {
  double parameter = 0.0;
  bool ok = false;
  std::string error;
  double total_cost = 0.0;
  int stations = 0;
  int piles = 0;
  double jain = 0.0;
  SolveStatus status = SolveStatus::Infeasible;
};

/// One solve per parameter value (dimension "soc_init" or "eta"), sharing
/// the constructed networks; failures are recorded per row and the sweep
/// continues. Rows come back sorted by parameter and are written to
/// sweep_<dimension>.csv when write_files is set.
std::vector<SweepRow> sweep(const RunConfig& cfg, const std::string& dimension,
                            bool write_files = true);

/// GeoJSON export of both networks; solution properties (built stations,
/// pile counts, chosen coupling lines) are included when sol is non-null.
void export_geojson(const std::string& path, const PlanningInstance& inst,
                    const PlanSolution* sol);

}  // namespace chargeplan
