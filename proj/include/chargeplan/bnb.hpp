#pragma once

#include <string>
#include <vector>

#include "chargeplan/conic.hpp"

namespace chargeplan {

struct BnBConfig {
  double rel_gap_tol = 1e-4;
  double integrality_tol = 1e-6;
  long node_limit = 200000;
  double time_limit_seconds = 900.0;
  int workers = 1;           // parallel node evaluations per synchronous round
  bool deterministic = true; // merge round results in node-id order

  void validate() const;
};

enum class SolveStatus { Optimal, Infeasible, BoundLimit };

struct SolveResult {
  SolveStatus status = SolveStatus::Infeasible;
  bool has_incumbent = false;
  std::vector<double> incumbent;
  double incumbent_obj = kInf;
  double best_bound = -kInf;
  double rel_gap = kInf;
  long node_count = 0;
  double wall_seconds = 0.0;
  bool bound_certified = true;  // false if any node was dropped after repeated failures
  std::string log;              // one line per processed node
};

/// Best-bound branch-and-bound with most-fractional branching. Integer
/// variables are split floor/ceil; numerically failed nodes are retried once
/// with a tightened subproblem and then dropped (uncertifying the bound).
SolveResult branch_and_bound(const ConicProgram& prog, ConicSubproblemSolver& sub,
                             const BnBConfig& cfg);

struct OracleResult {
  bool feasible = false;
  double objective = kInf;
  std::vector<double> x;
  long assignments = 0;  // integer assignments examined
  int failures = 0;      // assignments dropped for numerical reasons
};

/// Exhaustive enumeration over all integer assignments, each evaluated by a
/// continuous solve. Refuses instances with more than max_binaries integers.
OracleResult enumerate_oracle(const ConicProgram& prog, ConicSubproblemSolver& sub,
                              int max_binaries = 14);

}  // namespace chargeplan
