#include "chargeplan/bnb.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <future>
#include <set>
#include <stdexcept>

namespace chargeplan {

void BnBConfig::validate() const {
  if (!(rel_gap_tol > 0.0) || !(integrality_tol > 0.0))
    throw std::invalid_argument("branch-and-bound tolerances must be positive");
  if (node_limit < 1 || workers < 1) throw std::invalid_argument("bad branch-and-bound limits");
}

namespace {

struct Node {
  long id = 0;
  int depth = 0;
  double bound = -kInf;
  std::vector<VarBounds> overrides;
  bool retried = false;
};

struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound < b.bound;
    return a.id < b.id;
  }
};

int most_fractional(const std::vector<int>& ints, const std::vector<double>& x, double tol) {
  int pick = -1;
  double best = tol;
  for (int i : ints) {
    const double frac = std::abs(x[i] - std::round(x[i]));
    if (frac > best + 1e-15) {
      best = frac;
      pick = i;
    }
  }
  return pick;
}

void append_log(std::string& log, const Node& n, double bound, double gap, const char* what) {
  char line[160];
  std::snprintf(line, sizeof(line), "node %ld depth %d bound %.9e gap %.3e %s\n", n.id, n.depth,
                bound, gap, what);
  log += line;
}

}  // namespace

SolveResult branch_and_bound(const ConicProgram& prog, ConicSubproblemSolver& sub,
                             const BnBConfig& cfg) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  SolveResult res;
  const std::vector<int> ints = prog.integer_indices();
  std::set<Node, NodeOrder> queue;
  long next_id = 0;
  queue.insert({next_id++, 0, -kInf, {}, false});
  double pruned_floor = kInf;
  bool hit_limit = false;

  auto rel_gap = [&](double bound) {
    if (!res.has_incumbent) return kInf;
    return (res.incumbent_obj - bound) / std::max(1.0, std::abs(res.incumbent_obj));
  };

  while (!queue.empty()) {
    if (res.node_count >= cfg.node_limit || elapsed() > cfg.time_limit_seconds) {
      hit_limit = true;
      break;
    }
    // Synchronous round: take the best-bound nodes, solve, merge by id.
    std::vector<Node> batch;
    const int take = std::max(1, cfg.workers);
    while (!queue.empty() && static_cast<int>(batch.size()) < take) {
      batch.push_back(*queue.begin());
      queue.erase(queue.begin());
    }
    // The queue is bound-ordered, so the front carries the global lower
    // bound; it can never exceed the incumbent's objective.
    if (batch.front().bound > -kInf) {
      double lb = batch.front().bound;
      if (res.has_incumbent) lb = std::min(lb, res.incumbent_obj);
      res.best_bound = std::max(res.best_bound, lb);
    }

    // Fathom by the incumbent before spending solves.
    std::vector<Node> work;
    for (const Node& n : batch) {
      if (res.has_incumbent && rel_gap(n.bound) <= cfg.rel_gap_tol) {
        ++res.node_count;
        pruned_floor = std::min(pruned_floor, n.bound);
        append_log(res.log, n, n.bound, rel_gap(n.bound), "pruned");
      } else {
        work.push_back(n);
      }
    }
    if (work.empty()) continue;

    std::vector<ConicSolution> sols(work.size());
    if (work.size() == 1) {
      sols[0] = sub.solve(prog, work[0].overrides, work[0].retried);
    } else {
      std::vector<std::future<ConicSolution>> futs;
      futs.reserve(work.size());
      for (const Node& n : work)
        futs.push_back(std::async(std::launch::async,
                                  [&prog, &sub, &n] { return sub.solve(prog, n.overrides, n.retried); }));
      for (size_t i = 0; i < futs.size(); ++i) sols[i] = futs[i].get();
    }

    std::vector<size_t> order(work.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    if (cfg.deterministic)
      std::sort(order.begin(), order.end(),
                [&](size_t a, size_t b) { return work[a].id < work[b].id; });

    for (size_t k : order) {
      Node& n = work[k];
      const ConicSolution& sol = sols[k];
      ++res.node_count;
      if (sol.status == SubStatus::Infeasible) {
        append_log(res.log, n, n.bound, rel_gap(n.bound), "infeasible");
        continue;
      }
      if (sol.status == SubStatus::NumericalFailure) {
        if (!n.retried) {
          n.retried = true;
          --res.node_count;  // the retry is the same node
          queue.insert(n);
          append_log(res.log, n, n.bound, rel_gap(n.bound), "requeued");
        } else {
          res.bound_certified = false;
          append_log(res.log, n, n.bound, rel_gap(n.bound), "dropped (numerical)");
        }
        continue;
      }
      // Children may not report a looser bound than the parent.
      const double bound = std::max(n.bound, sol.objective);
      if (res.has_incumbent && rel_gap(bound) <= cfg.rel_gap_tol) {
        pruned_floor = std::min(pruned_floor, bound);
        append_log(res.log, n, bound, rel_gap(bound), "pruned");
        continue;
      }
      const int branch_var = most_fractional(ints, sol.x, cfg.integrality_tol);
      if (branch_var < 0) {
        if (!res.has_incumbent || sol.objective < res.incumbent_obj) {
          res.has_incumbent = true;
          res.incumbent_obj = sol.objective;
          res.incumbent = sol.x;
        }
        append_log(res.log, n, bound, rel_gap(bound), "integral");
        continue;
      }
      const double v = sol.x[branch_var];
      Node down{next_id++, n.depth + 1, bound, n.overrides, false};
      down.overrides.push_back({branch_var, -kInf, std::floor(v)});
      Node up{next_id++, n.depth + 1, bound, n.overrides, false};
      up.overrides.push_back({branch_var, std::ceil(v), kInf});
      queue.insert(down);
      queue.insert(up);
      append_log(res.log, n, bound, rel_gap(bound), "branched");
    }
  }

  if (hit_limit) {
    if (!queue.empty()) {
      double open_min = kInf;
      for (const Node& n : queue) open_min = std::min(open_min, n.bound);
      if (open_min > -kInf) res.best_bound = std::max(res.best_bound, std::min(open_min, pruned_floor));
    }
    res.status = SolveStatus::BoundLimit;
  } else if (res.has_incumbent) {
    res.best_bound = std::max(res.best_bound, std::min(res.incumbent_obj, pruned_floor));
    res.best_bound = std::min(res.best_bound, res.incumbent_obj);
    res.status = SolveStatus::Optimal;
  } else {
    res.status = SolveStatus::Infeasible;
  }
  if (res.has_incumbent) res.rel_gap = std::max(0.0, rel_gap(res.best_bound));
  res.wall_seconds = elapsed();
  return res;
}

OracleResult enumerate_oracle(const ConicProgram& prog, ConicSubproblemSolver& sub,
                              int max_binaries) {
  const std::vector<int> ints = prog.integer_indices();
  if (static_cast<int>(ints.size()) > max_binaries)
    throw std::invalid_argument("oracle scale exceeded");
  std::vector<long> lo(ints.size()), hi(ints.size());
  long total = 1;
  for (size_t k = 0; k < ints.size(); ++k) {
    const Variable& v = prog.variables[ints[k]];
    if (!std::isfinite(v.lb) || !std::isfinite(v.ub))
      throw std::invalid_argument("oracle scale exceeded");
    lo[k] = static_cast<long>(std::ceil(v.lb - 1e-9));
    hi[k] = static_cast<long>(std::floor(v.ub + 1e-9));
    if (hi[k] < lo[k]) return {};
    total *= hi[k] - lo[k] + 1;
    if (total > (1L << 22)) throw std::invalid_argument("oracle scale exceeded");
  }

  OracleResult best;
  std::vector<long> digits = lo;
  for (long a = 0; a < total; ++a) {
    std::vector<VarBounds> overrides;
    overrides.reserve(ints.size());
    for (size_t k = 0; k < ints.size(); ++k) {
      const double v = static_cast<double>(digits[k]);
      overrides.push_back({ints[k], v, v});
    }
    ConicSolution sol = sub.solve(prog, overrides, false);
    if (sol.status == SubStatus::NumericalFailure) sol = sub.solve(prog, overrides, true);
    ++best.assignments;
    if (sol.status == SubStatus::Optimal) {
      if (!best.feasible || sol.objective < best.objective) {
        best.feasible = true;
        best.objective = sol.objective;
        best.x = sol.x;
      }
    } else if (sol.status == SubStatus::NumericalFailure) {
      ++best.failures;
    }
    for (size_t k = 0; k < ints.size(); ++k) {  // mixed-radix increment
      if (++digits[k] <= hi[k]) break;
      digits[k] = lo[k];
    }
  }
  return best;
}

}  // namespace chargeplan
