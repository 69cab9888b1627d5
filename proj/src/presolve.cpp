#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "chargeplan/conic.hpp"

namespace chargeplan {

namespace {

constexpr double kPinEps = 1e-11;
constexpr double kImprove = 1e-9;

struct Work {
  const ConicProgram* prog = nullptr;
  double feas_tol = kFeasTol;
  std::vector<double> lb, ub;
  std::vector<char> row_active, soc_active;
  bool changed = false;
  bool infeasible = false;
  std::string message;

  bool pinned(int i) const { return ub[i] - lb[i] <= kPinEps * (1.0 + std::abs(lb[i])); }
  double value(int i) const { return 0.5 * (lb[i] + ub[i]); }

  void fail(const std::string& why) {
    if (!infeasible) {
      infeasible = true;
      message = why;
    }
  }

  void tighten_ub(int i, double v, const std::string& who) {
    if (v >= ub[i] - kImprove * (1.0 + std::abs(v))) return;
    if (v < lb[i] - feas_tol * (1.0 + std::abs(v))) {
      fail("presolve: bounds of " + prog->variables[i].name + " emptied by " + who);
      return;
    }
    ub[i] = std::max(v, lb[i]);
    changed = true;
  }

  void tighten_lb(int i, double v, const std::string& who) {
    if (v <= lb[i] + kImprove * (1.0 + std::abs(v))) return;
    if (v > ub[i] + feas_tol * (1.0 + std::abs(v))) {
      fail("presolve: bounds of " + prog->variables[i].name + " emptied by " + who);
      return;
    }
    lb[i] = std::min(v, ub[i]);
    changed = true;
  }

  void pin(int i, double v, const std::string& who) {
    tighten_lb(i, v, who);
    tighten_ub(i, v, who);
  }
};

void round_integer_bounds(Work& w) {
  for (int i = 0; i < w.prog->num_vars(); ++i) {
    if (w.prog->variables[i].kind == VarKind::Continuous) continue;
    const double nlb = std::ceil(w.lb[i] - 1e-9);
    const double nub = std::floor(w.ub[i] + 1e-9);
    if (nlb > w.ub[i] + 1e-9 || nub < w.lb[i] - 1e-9) {
      w.fail("presolve: integer bounds of " + w.prog->variables[i].name + " emptied");
      return;
    }
    if (nlb > w.lb[i]) {
      w.lb[i] = nlb;
      w.changed = true;
    }
    if (nub < w.ub[i]) {
      w.ub[i] = nub;
      w.changed = true;
    }
  }
}

/// One-direction activity tightening for sum(c*x) <= rhs over free entries.
void tighten_le(Work& w, const std::vector<std::pair<int, double>>& free_terms, double rhs,
                const std::string& who) {
  double min_act = 0.0;
  int inf_count = 0, inf_at = -1;
  std::vector<double> contrib(free_terms.size(), 0.0);
  for (size_t k = 0; k < free_terms.size(); ++k) {
    auto [i, c] = free_terms[k];
    const double lo = c > 0 ? c * w.lb[i] : c * w.ub[i];
    contrib[k] = lo;
    if (std::isinf(lo)) {
      ++inf_count;
      inf_at = static_cast<int>(k);
    } else {
      min_act += lo;
    }
  }
  if (inf_count >= 2) return;
  for (size_t k = 0; k < free_terms.size(); ++k) {
    auto [i, c] = free_terms[k];
    if (inf_count == 1 && static_cast<int>(k) != inf_at) continue;
    const double rest = inf_count == 1 ? min_act : min_act - contrib[k];
    const double room = (rhs - rest) / c;
    if (c > 0)
      w.tighten_ub(i, room, who);
    else
      w.tighten_lb(i, room, who);
    if (w.infeasible) return;
  }
}

void process_rows(Work& w) {
  const auto& prog = *w.prog;
  for (int r = 0; r < prog.num_rows() && !w.infeasible; ++r) {
    if (!w.row_active[r]) continue;
    const LinearRow& row = prog.linear_rows[r];
    double shift = 0.0;
    std::vector<std::pair<int, double>> free_terms;
    for (auto [i, c] : row.coeffs) {
      if (c == 0.0) continue;
      if (w.pinned(i))
        shift += c * w.value(i);
      else
        free_terms.emplace_back(i, c);
    }
    const double rhs = row.rhs - shift;
    const double tol = w.feas_tol * std::max(1.0, std::abs(row.rhs));
    if (free_terms.empty()) {
      const bool ok = row.sense == RowSense::LE   ? 0.0 <= rhs + tol
                      : row.sense == RowSense::GE ? 0.0 >= rhs - tol
                                                  : std::abs(rhs) <= tol;
      if (!ok)
        w.fail("presolve: row " + row.name + " violated by pinned variables");
      else {
        w.row_active[r] = 0;
        w.changed = true;
      }
      continue;
    }
    if (free_terms.size() == 1) {
      auto [i, c] = free_terms.front();
      const double v = rhs / c;
      if (row.sense == RowSense::EQ)
        w.pin(i, v, "row " + row.name);
      else if ((row.sense == RowSense::LE) == (c > 0))
        w.tighten_ub(i, v, "row " + row.name);
      else
        w.tighten_lb(i, v, "row " + row.name);
      if (!w.infeasible) {
        w.row_active[r] = 0;
        w.changed = true;
      }
      continue;
    }
    if (row.sense == RowSense::LE || row.sense == RowSense::EQ)
      tighten_le(w, free_terms, rhs, "row " + row.name);
    if (w.infeasible) return;
    if (row.sense == RowSense::GE || row.sense == RowSense::EQ) {
      auto negated = free_terms;
      for (auto& t : negated) t.second = -t.second;
      tighten_le(w, negated, -rhs, "row " + row.name);
    }
  }
}

struct ExprView {
  double constant = 0.0;
  std::vector<std::pair<int, double>> free_terms;
};

ExprView view_expr(const Work& w, const AffineExpr& e) {
  ExprView v;
  v.constant = e.constant;
  for (auto [i, c] : e.coeffs) {
    if (c == 0.0) continue;
    if (w.pinned(i))
      v.constant += c * w.value(i);
    else
      v.free_terms.emplace_back(i, c);
  }
  return v;
}

void process_socs(Work& w) {
  const auto& prog = *w.prog;
  for (int s = 0; s < prog.num_socs() && !w.infeasible; ++s) {
    if (!w.soc_active[s]) continue;
    const SocBlock& soc = prog.soc_blocks[s];
    const ExprView head = view_expr(w, soc.head);
    std::vector<ExprView> tails;
    bool all_pinned = head.free_terms.empty();
    for (const auto& u : soc.tail) {
      tails.push_back(view_expr(w, u));
      all_pinned = all_pinned && tails.back().free_terms.empty();
    }
    const double tol = w.feas_tol * std::max(1.0, std::abs(head.constant));
    if (all_pinned) {
      double nrm = 0.0;
      for (const auto& t : tails) nrm += t.constant * t.constant;
      if (std::sqrt(nrm) > head.constant + tol)
        w.fail("presolve: cone " + soc.name + " violated by pinned variables");
      else {
        w.soc_active[s] = 0;
        w.changed = true;
      }
      continue;
    }
    if (head.free_terms.empty() && head.constant <= tol) {
      // Zero-radius cone: every tail expression is forced to zero.
      if (head.constant < -tol) {
        w.fail("presolve: cone " + soc.name + " has negative radius");
        continue;
      }
      for (const auto& t : tails) {
        if (t.free_terms.size() == 1) {
          auto [i, c] = t.free_terms.front();
          w.pin(i, -t.constant / c, "cone " + soc.name);
        } else if (t.free_terms.empty() && std::abs(t.constant) > tol) {
          w.fail("presolve: cone " + soc.name + " violated by pinned variables");
        }
        if (w.infeasible) return;
      }
    }
  }
}

/// Folds parallel linear rows over the same support. Opposing inequalities
/// whose faces coincide pinch the feasible set to zero width, which the
/// interior-point subsolver cannot walk through; rewriting the pair as one
/// equality row moves the restriction onto the equality manifold where no
/// slack is required. Conflicting parallel rows are reported as infeasible.
std::string fold_parallel_rows(std::vector<LinearRow>& rows, double feas_tol) {
  const size_t nr = rows.size();
  // Interval each row places on z = a.x, with `a` in stored orientation.
  std::vector<double> lo(nr), hi(nr);
  for (size_t k = 0; k < nr; ++k) {
    const double b = rows[k].rhs;
    lo[k] = rows[k].sense == RowSense::GE || rows[k].sense == RowSense::EQ ? b : -kInf;
    hi[k] = rows[k].sense == RowSense::LE || rows[k].sense == RowSense::EQ ? b : kInf;
  }
  std::vector<char> drop(nr, 0);
  std::vector<LinearRow> folded;
  for (size_t k1 = 0; k1 < nr; ++k1) {
    if (drop[k1]) continue;
    for (size_t k2 = k1 + 1; k2 < nr; ++k2) {
      if (drop[k2]) continue;
      const auto& a1 = rows[k1].coeffs;
      const auto& a2 = rows[k2].coeffs;
      if (a1.size() != a2.size()) continue;
      bool same_support = true;
      for (size_t j = 0; j < a1.size() && same_support; ++j)
        same_support = a1[j].first == a2[j].first;
      if (!same_support) continue;
      const double mu = a2.front().second / a1.front().second;
      if (mu == 0.0 || !std::isfinite(mu)) continue;
      double amax = 0.0;
      for (const auto& t : a1) amax = std::max(amax, std::abs(mu * t.second));
      bool proportional = true;
      for (size_t j = 0; j < a1.size() && proportional; ++j)
        proportional = std::abs(a2[j].second - mu * a1[j].second) <= 1e-9 * (1.0 + amax);
      if (!proportional) continue;
      // Map row k2's interval onto z1 = a1.x and intersect.
      double l2 = mu > 0.0 ? lo[k2] / mu : hi[k2] / mu;
      double h2 = mu > 0.0 ? hi[k2] / mu : lo[k2] / mu;
      const double il = std::max(lo[k1], l2);
      const double ih = std::min(hi[k1], h2);
      const double tol = feas_tol * std::max({1.0, std::abs(il), std::abs(ih)});
      if (il > ih + tol)
        return "presolve: rows " + rows[k1].name + " and " + rows[k2].name + " conflict";
      if (std::isfinite(il) && std::isfinite(ih) && ih - il <= tol) {
        LinearRow eq;
        eq.name = rows[k1].name;
        eq.coeffs = a1;
        eq.rhs = 0.5 * (il + ih);
        eq.sense = RowSense::EQ;
        drop[k1] = drop[k2] = 1;
        folded.push_back(std::move(eq));
        break;
      }
      // Overlapping but slack-wide parallels are harmless; keep both.
    }
  }
  if (!folded.empty()) {
    std::vector<LinearRow> kept;
    kept.reserve(nr);
    for (size_t k = 0; k < nr; ++k)
      if (!drop[k]) kept.push_back(std::move(rows[k]));
    for (auto& r : folded) kept.push_back(std::move(r));
    rows = std::move(kept);
  }
  return {};
}

void append_terms(std::vector<std::pair<int, double>>& out, const Work& w,
                  const std::vector<int>& new_of_orig,
                  const std::vector<std::pair<int, double>>& terms, double& constant) {
  std::map<int, double> merged;
  for (auto [i, c] : terms) {
    if (c == 0.0) continue;
    if (w.pinned(i))
      constant += c * w.value(i);
    else
      merged[new_of_orig[i]] += c;
  }
  for (auto [i, c] : merged)
    if (c != 0.0) out.emplace_back(i, c);
}

}  // namespace

std::vector<double> PresolveResult::expand(const std::vector<double>& xr) const {
  std::vector<double> x(pinned.size(), 0.0);
  for (size_t i = 0; i < pinned.size(); ++i) x[i] = pinned[i] ? pinned_value[i] : 0.0;
  for (size_t r = 0; r < orig_of_reduced.size(); ++r) x[orig_of_reduced[r]] = xr[r];
  return x;
}

PresolveResult presolve(const ConicProgram& prog, const std::vector<VarBounds>& overrides,
                        double feas_tol) {
  Work w;
  w.prog = &prog;
  w.feas_tol = feas_tol;
  const int n = prog.num_vars();
  w.lb.resize(n);
  w.ub.resize(n);
  for (int i = 0; i < n; ++i) {
    w.lb[i] = prog.variables[i].lb;
    w.ub[i] = prog.variables[i].ub;
  }
  for (const auto& o : overrides) {
    w.lb[o.index] = std::max(w.lb[o.index], o.lb);
    w.ub[o.index] = std::min(w.ub[o.index], o.ub);
    if (w.lb[o.index] > w.ub[o.index] + feas_tol * (1.0 + std::abs(w.lb[o.index])))
      w.fail("presolve: override empties bounds of " + prog.variables[o.index].name);
  }
  w.row_active.assign(prog.num_rows(), 1);
  w.soc_active.assign(prog.num_socs(), 1);

  for (int pass = 0; pass < 50 && !w.infeasible; ++pass) {
    w.changed = false;
    round_integer_bounds(w);
    if (w.infeasible) break;
    process_rows(w);
    if (w.infeasible) break;
    process_socs(w);
    if (!w.changed) break;
  }

  PresolveResult out;
  out.pinned.assign(n, 0);
  out.pinned_value.assign(n, 0.0);
  if (w.infeasible) {
    out.infeasible = true;
    out.message = w.message;
    return out;
  }

  std::vector<int> new_of_orig(n, -1);
  for (int i = 0; i < n; ++i) {
    if (w.pinned(i)) {
      out.pinned[i] = 1;
      double v = w.value(i);
      if (prog.variables[i].kind != VarKind::Continuous) v = std::round(v);
      out.pinned_value[i] = v;
    } else {
      new_of_orig[i] = static_cast<int>(out.orig_of_reduced.size());
      out.orig_of_reduced.push_back(i);
      out.reduced.variables.push_back({prog.variables[i].name, w.lb[i], w.ub[i],
                                       prog.variables[i].kind});
    }
  }

  out.reduced.objective_constant = prog.objective_constant;
  append_terms(out.reduced.objective, w, new_of_orig, prog.objective,
               out.reduced.objective_constant);

  for (int r = 0; r < prog.num_rows(); ++r) {
    if (!w.row_active[r]) continue;
    const LinearRow& row = prog.linear_rows[r];
    LinearRow nr;
    nr.name = row.name;
    nr.sense = row.sense;
    double shift = 0.0;
    append_terms(nr.coeffs, w, new_of_orig, row.coeffs, shift);
    nr.rhs = row.rhs - shift;
    if (!nr.coeffs.empty()) out.reduced.linear_rows.push_back(std::move(nr));
  }
  if (std::string err = fold_parallel_rows(out.reduced.linear_rows, feas_tol); !err.empty()) {
    out.infeasible = true;
    out.message = std::move(err);
    return out;
  }

  for (int s = 0; s < prog.num_socs(); ++s) {
    if (!w.soc_active[s]) continue;
    const SocBlock& soc = prog.soc_blocks[s];
    SocBlock nb;
    nb.name = soc.name;
    nb.head.constant = soc.head.constant;
    append_terms(nb.head.coeffs, w, new_of_orig, soc.head.coeffs, nb.head.constant);
    for (const auto& u : soc.tail) {
      AffineExpr nu;
      nu.constant = u.constant;
      append_terms(nu.coeffs, w, new_of_orig, u.coeffs, nu.constant);
      nb.tail.push_back(std::move(nu));
    }
    out.reduced.soc_blocks.push_back(std::move(nb));
  }
  return out;
}

}  // namespace chargeplan
