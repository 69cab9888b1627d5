#include "chargeplan/program.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace chargeplan {

std::vector<int> ConicProgram::integer_indices() const {
  std::vector<int> idx;
  for (int i = 0; i < num_vars(); ++i)
    if (variables[i].kind != VarKind::Continuous) idx.push_back(i);
  return idx;
}

double ConicProgram::eval_objective(const std::vector<double>& x) const {
  double v = objective_constant;
  for (auto [i, c] : objective) v += c * x[i];
  return v;
}

double ConicProgram::eval_affine(const AffineExpr& e, const std::vector<double>& x) {
  double v = e.constant;
  for (auto [i, c] : e.coeffs) v += c * x[i];
  return v;
}

double ConicProgram::eval_row(const LinearRow& row, const std::vector<double>& x) const {
  double v = 0.0;
  for (auto [i, c] : row.coeffs) v += c * x[i];
  return v;
}

double ConicProgram::max_violation(const std::vector<double>& x) const {
  double worst = 0.0;
  for (int i = 0; i < num_vars(); ++i) {
    worst = std::max(worst, variables[i].lb - x[i]);
    worst = std::max(worst, x[i] - variables[i].ub);
  }
  for (const auto& row : linear_rows) {
    const double v = eval_row(row, x);
    switch (row.sense) {
      case RowSense::LE: worst = std::max(worst, v - row.rhs); break;
      case RowSense::GE: worst = std::max(worst, row.rhs - v); break;
      case RowSense::EQ: worst = std::max(worst, std::abs(v - row.rhs)); break;
    }
  }
  for (const auto& soc : soc_blocks) {
    const double t = eval_affine(soc.head, x);
    double nrm = 0.0;
    for (const auto& u : soc.tail) {
      const double uv = eval_affine(u, x);
      nrm += uv * uv;
    }
    worst = std::max(worst, std::sqrt(nrm) - t);
  }
  return worst;
}

double ConicProgram::max_scaled_violation(const std::vector<double>& x) const {
  double worst = 0.0;
  for (int i = 0; i < num_vars(); ++i) {
    const auto& v = variables[i];
    if (std::isfinite(v.lb)) worst = std::max(worst, (v.lb - x[i]) / (1.0 + std::abs(v.lb)));
    if (std::isfinite(v.ub)) worst = std::max(worst, (x[i] - v.ub) / (1.0 + std::abs(v.ub)));
  }
  for (const auto& row : linear_rows) {
    const double v = eval_row(row, x);
    const double scale = 1.0 + std::abs(row.rhs);
    switch (row.sense) {
      case RowSense::LE: worst = std::max(worst, (v - row.rhs) / scale); break;
      case RowSense::GE: worst = std::max(worst, (row.rhs - v) / scale); break;
      case RowSense::EQ: worst = std::max(worst, std::abs(v - row.rhs) / scale); break;
    }
  }
  for (const auto& soc : soc_blocks) {
    const double t = eval_affine(soc.head, x);
    double nrm = 0.0;
    for (const auto& u : soc.tail) {
      const double uv = eval_affine(u, x);
      nrm += uv * uv;
    }
    worst = std::max(worst, (std::sqrt(nrm) - t) / (1.0 + std::abs(t)));
  }
  return worst;
}

namespace {

void check_indices(const std::vector<std::pair<int, double>>& coeffs, int n,
                   const std::string& where) {
  for (auto [i, c] : coeffs) {
    if (i < 0 || i >= n) throw std::invalid_argument(where + ": variable index out of range");
    if (!std::isfinite(c)) throw std::invalid_argument(where + ": non-finite coefficient");
  }
}

std::string row_signature(const LinearRow& row) {
  auto sorted = row.coeffs;
  std::sort(sorted.begin(), sorted.end());
  std::ostringstream os;
  os << static_cast<int>(row.sense) << '|' << row.rhs;
  for (auto [i, c] : sorted) os << '|' << i << ':' << c;
  return os.str();
}

void append_affine(std::ostringstream& os, const AffineExpr& e,
                   const std::vector<Variable>& vars) {
  os << e.constant;
  for (auto [i, c] : e.coeffs) os << (c < 0 ? " - " : " + ") << std::abs(c) << '*' << vars[i].name;
}

}  // namespace

void ConicProgram::validate() const {
  const int n = num_vars();
  std::set<std::string> seen;
  for (const auto& v : variables)
    if (v.lb > v.ub)
      throw std::invalid_argument("variable " + v.name + ": lower bound exceeds upper bound");
  check_indices(objective, n, "objective");
  for (const auto& row : linear_rows) {
    check_indices(row.coeffs, n, "row " + row.name);
    if (!seen.insert(row_signature(row)).second)
      throw std::invalid_argument("duplicate row " + row.name);
  }
  for (const auto& soc : soc_blocks) {
    check_indices(soc.head.coeffs, n, "cone " + soc.name);
    for (const auto& u : soc.tail) check_indices(u.coeffs, n, "cone " + soc.name);
    if (soc.tail.empty()) throw std::invalid_argument("cone " + soc.name + " has empty tail");
  }
}

std::string ConicProgram::to_text() const {
  std::ostringstream os;
  os.precision(17);
  os << "vars " << num_vars() << "\n";
  for (int i = 0; i < num_vars(); ++i) {
    const auto& v = variables[i];
    const char* kind = v.kind == VarKind::Continuous ? "cont"
                       : v.kind == VarKind::Binary   ? "bin"
                                                     : "int";
    os << "var " << i << ' ' << v.name << ' ' << kind << ' ' << v.lb << ' ' << v.ub << "\n";
  }
  os << "min " << objective_constant;
  for (auto [i, c] : objective) os << ' ' << variables[i].name << ':' << c;
  os << "\n";
  for (const auto& row : linear_rows) {
    const char* sense = row.sense == RowSense::LE ? "<=" : row.sense == RowSense::GE ? ">=" : "=";
    os << "row " << row.name << ' ' << sense << ' ' << row.rhs;
    for (auto [i, c] : row.coeffs) os << ' ' << variables[i].name << ':' << c;
    os << "\n";
  }
  for (const auto& soc : soc_blocks) {
    os << "soc " << soc.name << " head ";
    append_affine(os, soc.head, variables);
    for (const auto& u : soc.tail) {
      os << " | ";
      append_affine(os, u, variables);
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace chargeplan
