#pragma once

#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace chargeplan {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class VarKind { Continuous, Binary, Integer };

struct Variable {
  std::string name;
  double lb = -kInf;
  double ub = kInf;
  VarKind kind = VarKind::Continuous;
};

enum class RowSense { LE, EQ, GE };

/// Sparse linear row: sum(coef * x) sense rhs.
struct LinearRow {
  std::string name;
  RowSense sense = RowSense::EQ;
  double rhs = 0.0;
  std::vector<std::pair<int, double>> coeffs;
};

/// Sparse affine expression: constant + sum(coef * x).
struct AffineExpr {
  double constant = 0.0;
  std::vector<std::pair<int, double>> coeffs;

  AffineExpr& add(int var, double coef) {
    if (coef != 0.0) coeffs.emplace_back(var, coef);
    return *this;
  }
  static AffineExpr of(int var, double coef = 1.0) {
    AffineExpr e;
    e.add(var, coef);
    return e;
  }
};

/// Second-order cone ||(u_1..u_q)||_2 <= t over affine expressions.
struct SocBlock {
  std::string name;
  AffineExpr head;
  std::vector<AffineExpr> tail;
};

/// Sparse mixed-integer SOCP in natural (not standard) form, minimization.
struct ConicProgram {
  std::vector<Variable> variables;
  std::vector<LinearRow> linear_rows;
  std::vector<SocBlock> soc_blocks;
  std::vector<std::pair<int, double>> objective;
  double objective_constant = 0.0;

  int add_variable(std::string name, double lb, double ub, VarKind kind = VarKind::Continuous) {
    variables.push_back({std::move(name), lb, ub, kind});
    return static_cast<int>(variables.size()) - 1;
  }
  int add_binary(std::string name) { return add_variable(std::move(name), 0.0, 1.0, VarKind::Binary); }

  LinearRow& add_row(std::string name, RowSense sense, double rhs) {
    linear_rows.push_back({std::move(name), sense, rhs, {}});
    return linear_rows.back();
  }

  SocBlock& add_soc(std::string name) {
    soc_blocks.push_back({std::move(name), {}, {}});
    return soc_blocks.back();
  }

  void set_objective(int var, double coef) { objective.emplace_back(var, coef); }

  int num_vars() const { return static_cast<int>(variables.size()); }
  int num_rows() const { return static_cast<int>(linear_rows.size()); }
  int num_socs() const { return static_cast<int>(soc_blocks.size()); }
  std::vector<int> integer_indices() const;

  double eval_objective(const std::vector<double>& x) const;
  static double eval_affine(const AffineExpr& e, const std::vector<double>& x);
  double eval_row(const LinearRow& row, const std::vector<double>& x) const;

  /// Worst violation of bounds, rows, and cones at x (0 when feasible).
  double max_violation(const std::vector<double>& x) const;

  /// Like max_violation, but each item is scaled by 1 + |rhs| (rows/cones)
  /// or 1 + |bound| so constraints of different magnitude compare fairly.
  double max_scaled_violation(const std::vector<double>& x) const;

  /// Structural checks: indices in range, bounds ordered, no duplicate rows.
  void validate() const;

  /// Human-readable text form (vars, objective, rows, cones), one item per line.
  std::string to_text() const;
};

}  // namespace chargeplan
