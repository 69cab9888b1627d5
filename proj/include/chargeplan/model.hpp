#pragma once

#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "chargeplan/bnb.hpp"
#include "chargeplan/fairness.hpp"
#include "chargeplan/gridsynth.hpp"
#include "chargeplan/net.hpp"
#include "chargeplan/program.hpp"

namespace chargeplan {

/// Complete solver input: the coupled networks plus economics and policy.
struct PlanningInstance {
  TransitNetwork transit;
  PowerGrid grid;
  std::vector<CouplingCandidate> coupling;
  EconomicParams econ;
  BatteryPolicy battery;

  bool fairness_enabled = false;
  double fairness_eta = 0.0;      // required Jain's-index level
  int fairness_budget = 0;        // route-selection budget
  bool budget_is_equality = true; // equality keeps the budget binding; see README
  ZonePartition zones;

  void validate() const;
};

/// Handles into the assembled program, one entry per model symbol.
struct VariableMap {
  std::vector<StopId> candidates;                       // station site order
  std::map<StopId, int> X;                              // station built
  std::map<StopId, int> beta;                           // pile count
  std::map<std::pair<RouteId, StopId>, int> y;          // route uses station
  std::map<std::pair<PowerNodeId, StopId>, int> psi;    // coupling line built
  std::map<std::tuple<RouteId, StopId, PowerNodeId>, int> Yprod;  // y * psi
  std::map<RouteId, int> I;                             // route selected (fairness)
  std::map<std::pair<RouteId, int>, int> e;             // battery energy per stop position
  std::map<std::pair<RouteId, int>, int> s;             // charge amount per stop position
  std::map<std::pair<PowerNodeId, PowerNodeId>, int> P; // branch real power
  std::map<std::pair<PowerNodeId, PowerNodeId>, int> Q; // branch reactive power
  std::map<std::pair<PowerNodeId, PowerNodeId>, int> l; // branch squared current
  std::map<PowerNodeId, int> v;                         // squared node voltage
  std::vector<int> w;                                   // per-zone ratio (fairness)
};

/// Creates every variable for the chosen variant; bounds encode the battery
/// envelope, pile Big-M range, voltage limits, and binary domains.
VariableMap create_variables(const PlanningInstance& inst, bool fairness_variant,
                             ConicProgram& prog);

/// Station + pile + coupling-line investment plus per-unit loss cost on
/// squared branch currents over the planning horizon.
void build_objective(const PlanningInstance& inst, const VariableMap& vars, ConicProgram& prog);

/// Station gating: y <= X, beta <= M X, sum_a y <= beta, sum_i psi = X.
int add_siting_constraints(const PlanningInstance& inst, const VariableMap& vars,
                           ConicProgram& prog);

/// Battery envelope and conservation along each closed route; charge amounts
/// capped by charger power times dwell and gated by y. In the fairness
/// variant every battery term is multiplied by the route-selection binary.
int add_energy_constraints(const PlanningInstance& inst, const VariableMap& vars,
                           bool fairness_variant, ConicProgram& prog);

/// Branch-flow (DistFlow) rows with the conic relaxation of the current
/// equation, plus the product linearization tying charging load to built
/// stations and coupling lines.
int add_powerflow_constraints(const PlanningInstance& inst, const VariableMap& vars,
                              ConicProgram& prog);

/// Zone-ratio definitions, the fairness cone, and the selection budget.
int add_fairness_constraints(const PlanningInstance& inst, const VariableMap& vars,
                             const ZonePartition& zones, ConicProgram& prog);

struct ModelBuild {
  ConicProgram prog;
  VariableMap vars;
};

/// Assembles the full program for either variant.
ModelBuild build_model(const PlanningInstance& inst, bool fairness_variant);

struct StationPlan {
  StopId stop;
  int piles = 0;
  PowerNodeId coupled_node = 0;
  double line_miles = 0.0;
  double line_cost_usd = 0.0;
};

/// Decoded optimizer output in engineering units.
struct PlanSolution {
  SolveStatus status = SolveStatus::Infeasible;
  double objective = 0.0;
  double station_cost = 0.0, pile_cost = 0.0, line_cost = 0.0, loss_cost = 0.0;
  std::vector<StationPlan> stations;
  std::set<RouteId> selected_routes;
  std::map<RouteId, std::vector<double>> energy_kwh;  // per stop position
  std::map<RouteId, std::vector<double>> charge_kwh;  // per stop position
  std::map<std::pair<PowerNodeId, PowerNodeId>, double> P_pu, Q_pu, l_pu;
  std::map<PowerNodeId, double> v_pu;
  std::vector<double> w;       // recomputed from the rounded selection
  double jain = 1.0;
  bool fairness_enabled = false;
  double best_bound = 0.0;
  double rel_gap = 0.0;
  long node_count = 0;
  double wall_seconds = 0.0;
  bool bound_certified = true;
  std::vector<double> raw;     // solver point, program indexing
};

/// Rounds the integer assignment, recomputes zone ratios from it, and splits
/// the objective into the four cost components.
PlanSolution decode_solution(const PlanningInstance& inst, const VariableMap& vars,
                             bool fairness_variant, const SolveResult& res);

}  // namespace chargeplan
