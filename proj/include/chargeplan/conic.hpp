#pragma once

#include <string>
#include <vector>

#include "chargeplan/program.hpp"

namespace chargeplan {

enum class SubStatus { Optimal, Infeasible, NumericalFailure };

struct ConicSolution {
  SubStatus status = SubStatus::NumericalFailure;
  std::vector<double> x;  // indexed like the program handed to solve()
  double objective = 0.0;
  int iterations = 0;
  std::string message;
};

/// Branch-local replacement bounds for one variable.
struct VarBounds {
  int index = 0;
  double lb = -kInf;
  double ub = kInf;
};

/// Continuous-relaxation solver contract. Implementations relax integrality,
/// honor bound overrides, and return points feasible within 1e-7 (scaled).
class ConicSubproblemSolver {
 public:
  virtual ~ConicSubproblemSolver() = default;
  /// `tightened` requests a higher-accuracy retry after a numerical failure.
  virtual ConicSolution solve(const ConicProgram& prog, const std::vector<VarBounds>& overrides,
                              bool tightened) = 0;
};

inline constexpr double kFeasTol = 1e-7;

/// Bound-tightening presolve: substitutes pinned variables, converts
/// single-variable rows to bounds, tightens by row activity, rounds integer
/// bounds, and evaluates fully-pinned rows and cones. Produces a compacted
/// program over the remaining free variables.
struct PresolveResult {
  bool infeasible = false;
  std::string message;
  ConicProgram reduced;            // objective_constant absorbs pinned terms
  std::vector<int> orig_of_reduced;
  std::vector<char> pinned;        // per original variable
  std::vector<double> pinned_value;

  /// Lifts a reduced-space point back to original indexing.
  std::vector<double> expand(const std::vector<double>& xr) const;
};

PresolveResult presolve(const ConicProgram& prog, const std::vector<VarBounds>& overrides,
                        double feas_tol = kFeasTol);

/// Reference primal barrier interior-point implementation (dense linear
/// algebra; intended for small programs). Phase I finds a strictly interior
/// point by minimizing a uniform cone shift; phase II follows the central
/// path with a geometric schedule on the barrier weight.
class BarrierSolver : public ConicSubproblemSolver {
 public:
  struct Options {
    // Duality-gap target, relative to the scaled objective magnitude. Costs
    // are normalized by their largest coefficient, so 1e-6 keeps the absolute
    // objective error around a dollar on realistic cost models while staying
    // inside the barrier-weight range double precision can center.
    double gap_tol = 1e-6;
    double gap_tol_tight = 1e-7; // used when tightened = true
    int max_newton = 60;
    int max_outer = 24;
    bool log = false;
  };

  BarrierSolver() = default;
  explicit BarrierSolver(Options opt) : opt_(opt) {}

  ConicSolution solve(const ConicProgram& prog, const std::vector<VarBounds>& overrides,
                      bool tightened) override;

 private:
  Options opt_;
};

}  // namespace chargeplan
