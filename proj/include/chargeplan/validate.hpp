#pragma once

#include <map>
#include <string>
#include <vector>

#include "chargeplan/model.hpp"
#include "chargeplan/net.hpp"

namespace chargeplan {

/// Exact branch-flow state produced by the backward/forward sweep.
struct SweepResult {
  std::map<std::pair<PowerNodeId, PowerNodeId>, double> P_pu, Q_pu, l_pu;
  std::map<PowerNodeId, double> v_pu;  // squared voltage
  int iterations = 0;
  double residual = 0.0;  // worst equation violation at the returned point
};

/// Solves the nonconvex branch-flow equations on a radial grid by
/// backward/forward sweep from a flat start. `extra_load` adds withdrawals
/// (e.g. charging stations) on top of the grid's native node loads.
/// Throws "sweep diverged" when the fixed point is not reached.
SweepResult exact_distflow_resolve(const PowerGrid& grid,
                                   const std::map<PowerNodeId, PuLoad>& extra_load = {},
                                   double tol = 1e-10, int max_iters = 200);

/// Per-branch relaxation residual rho = l * v_from - (P^2 + Q^2).
/// Feasible points have rho >= 0 (up to noise); rho == 0 means the convex
/// relaxation recovered the physical flow on that branch.
struct ExactnessReport {
  std::map<std::pair<PowerNodeId, PowerNodeId>, double> residual;
  double max_residual = 0.0;
  double min_residual = 0.0;
  std::vector<std::string> flagged;  // branches with rho > tol or rho < floor
};

ExactnessReport exactness_check(const PowerGrid& grid, const PlanSolution& sol,
                                double tol = 1e-5, double floor = -1e-7);

/// Tolerances for validate_solution; defaults match the documented contract.
struct ValidationTolerances {
  double cone_residual = 1e-5;       // pu^2
  double cone_floor = -1e-7;         // pu^2, relaxation direction
  double battery_kwh = 1e-6;
  double limit_pu = 1e-7;            // voltage/current bound slack, pu^2
  double resolve_voltage_pu = 1e-4;  // |sqrt(v_solver) - sqrt(v_sweep)|
  double jain_slack = 1e-8;
  double sweep_residual = 1e-10;
  int sweep_max_iters = 200;
};

struct ValidationReport {
  bool relaxation_exact = true;
  double max_cone_residual = 0.0;
  double min_cone_residual = 0.0;

  bool battery_ok = true;
  double max_battery_deviation_kwh = 0.0;

  bool limits_ok = true;
  double max_voltage_violation = 0.0;  // pu^2 beyond bounds
  double max_current_violation = 0.0;  // pu^2 beyond branch limit

  bool resolve_ok = true;
  double max_resolve_voltage_delta = 0.0;  // pu, vs independent sweep

  bool fairness_ok = true;
  double jain = 1.0;
  double jain_required = 0.0;

  std::vector<std::string> notes;

  bool passed() const {
    return relaxation_exact && battery_ok && limits_ok && resolve_ok && fairness_ok;
  }
  std::string to_text() const;
};

/// Replays the battery dynamics of every selected route from the decoded
/// charge amounts and reports the worst deviation from the solver energies
/// and any excursion outside the safe SOC band.
void battery_audit(const PlanningInstance& inst, const PlanSolution& sol,
                   const ValidationTolerances& tol, ValidationReport& report);

/// Full post-solution physics check: cone exactness, battery replay, bound
/// compliance, and an exact re-solve with the plan's charging withdrawals.
ValidationReport validate_solution(const PlanningInstance& inst, const VariableMap& vars,
                                   bool fairness_variant, const PlanSolution& sol,
                                   const ValidationTolerances& tol = {});

}  // namespace chargeplan
