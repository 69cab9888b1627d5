#include "chargeplan/validate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace chargeplan {

namespace {

struct BranchRef {
  const PowerBranch* b;
  int depth;
};

/// Branches sorted root-first (forward order); reverse for the backward pass.
std::vector<BranchRef> depth_order(const PowerGrid& grid) {
  std::map<PowerNodeId, int> depth{{grid.slack_id, 0}};
  std::vector<BranchRef> order;
  order.reserve(grid.branches.size());
  bool grew = true;
  while (grew && order.size() < grid.branches.size()) {
    grew = false;
    for (const auto& b : grid.branches) {
      if (depth.count(b.to) || !depth.count(b.from)) continue;
      depth[b.to] = depth[b.from] + 1;
      order.push_back({&b, depth[b.to]});
      grew = true;
    }
  }
  if (order.size() != grid.branches.size())
    throw std::invalid_argument("topology not radial");
  std::stable_sort(order.begin(), order.end(),
                   [](const BranchRef& a, const BranchRef& b) { return a.depth < b.depth; });
  return order;
}

PuLoad node_load(const PowerGrid& grid, const std::map<PowerNodeId, PuLoad>& extra,
                 PowerNodeId id) {
  PuLoad total = grid.find_node(id)->load_pu;
  const auto it = extra.find(id);
  if (it != extra.end()) {
    total.p += it->second.p;
    total.q += it->second.q;
  }
  return total;
}

}  // namespace

SweepResult exact_distflow_resolve(const PowerGrid& grid,
                                   const std::map<PowerNodeId, PuLoad>& extra_load, double tol,
                                   int max_iters) {
  grid.validate();
  const std::vector<BranchRef> order = depth_order(grid);

  SweepResult r;
  for (const auto& nd : grid.nodes) r.v_pu[nd.id] = grid.v_slack_sq_pu;  // flat start
  for (const auto& b : grid.branches) {
    r.P_pu[{b.from, b.to}] = 0.0;
    r.Q_pu[{b.from, b.to}] = 0.0;
    r.l_pu[{b.from, b.to}] = 0.0;
  }

  std::map<PowerNodeId, std::vector<const PowerBranch*>> children;
  for (const auto& b : grid.branches) children[b.from].push_back(&b);

  auto equation_residual = [&]() {
    double worst = 0.0;
    for (const auto& b : grid.branches) {
      const std::pair<PowerNodeId, PowerNodeId> key{b.from, b.to};
      const PuLoad load = node_load(grid, extra_load, b.to);
      double bp = r.P_pu[key] - b.r_pu * r.l_pu[key] - load.p;
      double bq = r.Q_pu[key] - b.x_pu * r.l_pu[key] - load.q;
      for (const PowerBranch* c : children[b.to]) {
        bp -= r.P_pu[{c->from, c->to}];
        bq -= r.Q_pu[{c->from, c->to}];
      }
      const double dv = r.v_pu[b.to] - r.v_pu[b.from] +
                        2.0 * (b.r_pu * r.P_pu[key] + b.x_pu * r.Q_pu[key]) -
                        (b.r_pu * b.r_pu + b.x_pu * b.x_pu) * r.l_pu[key];
      const double cur =
          r.l_pu[key] * r.v_pu[b.from] - (r.P_pu[key] * r.P_pu[key] + r.Q_pu[key] * r.Q_pu[key]);
      worst = std::max({worst, std::abs(bp), std::abs(bq), std::abs(dv), std::abs(cur)});
    }
    return worst;
  };

  for (r.iterations = 1; r.iterations <= max_iters; ++r.iterations) {
    // Backward: accumulate downstream power plus the loss on each branch.
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      const PowerBranch& b = *it->b;
      const std::pair<PowerNodeId, PowerNodeId> key{b.from, b.to};
      const PuLoad load = node_load(grid, extra_load, b.to);
      double p = load.p + b.r_pu * r.l_pu[key];
      double q = load.q + b.x_pu * r.l_pu[key];
      for (const PowerBranch* c : children[b.to]) {
        p += r.P_pu[{c->from, c->to}];
        q += r.Q_pu[{c->from, c->to}];
      }
      r.P_pu[key] = p;
      r.Q_pu[key] = q;
    }
    // Forward: propagate voltage drops from the slack node.
    for (const BranchRef& br : order) {
      const PowerBranch& b = *br.b;
      const std::pair<PowerNodeId, PowerNodeId> key{b.from, b.to};
      r.v_pu[b.to] = r.v_pu[b.from] -
                     2.0 * (b.r_pu * r.P_pu[key] + b.x_pu * r.Q_pu[key]) +
                     (b.r_pu * b.r_pu + b.x_pu * b.x_pu) * r.l_pu[key];
      if (!(r.v_pu[b.from] > 1e-6)) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "sweep diverged (voltage collapse at node %d)", b.from);
        throw std::runtime_error(buf);
      }
      r.l_pu[key] = (r.P_pu[key] * r.P_pu[key] + r.Q_pu[key] * r.Q_pu[key]) / r.v_pu[b.from];
    }
    r.residual = equation_residual();
    if (r.residual <= tol) return r;
  }
  char buf[128];
  std::snprintf(buf, sizeof buf, "sweep diverged (residual %.3e after %d iterations)", r.residual,
                max_iters);
  throw std::runtime_error(buf);
}

ExactnessReport exactness_check(const PowerGrid& grid, const PlanSolution& sol, double tol,
                                double floor) {
  ExactnessReport rep;
  bool first = true;
  for (const auto& b : grid.branches) {
    const std::pair<PowerNodeId, PowerNodeId> key{b.from, b.to};
    const double P = sol.P_pu.at(key);
    const double Q = sol.Q_pu.at(key);
    const double l = sol.l_pu.at(key);
    const double v = sol.v_pu.at(b.from);
    const double rho = l * v - (P * P + Q * Q);
    rep.residual[key] = rho;
    rep.max_residual = first ? rho : std::max(rep.max_residual, rho);
    rep.min_residual = first ? rho : std::min(rep.min_residual, rho);
    first = false;
    if (rho > tol || rho < floor)
      rep.flagged.push_back(std::to_string(b.from) + "-" + std::to_string(b.to));
  }
  return rep;
}

void battery_audit(const PlanningInstance& inst, const PlanSolution& sol,
                   const ValidationTolerances& tol, ValidationReport& report) {
  for (const auto& route : inst.transit.routes) {
    if (!sol.selected_routes.count(route.id)) continue;
    const auto eit = sol.energy_kwh.find(route.id);
    const auto cit = sol.charge_kwh.find(route.id);
    if (eit == sol.energy_kwh.end() || cit == sol.charge_kwh.end()) {
      report.battery_ok = false;
      report.notes.push_back("route " + route.id + ": missing decoded trajectory");
      continue;
    }
    const std::vector<double>& e = eit->second;
    const std::vector<double>& s = cit->second;
    const double cap = route.battery_kwh;
    const double lo = inst.battery.soc_min * cap;
    const double hi = inst.battery.soc_max * cap;

    double replay = inst.battery.soc_init * cap;
    for (size_t k = 0; k < e.size(); ++k) {
      const double dev = std::abs(e[k] - replay);
      report.max_battery_deviation_kwh = std::max(report.max_battery_deviation_kwh, dev);
      if (dev > tol.battery_kwh) {
        report.battery_ok = false;
        report.notes.push_back("route " + route.id + " stop " + std::to_string(k) +
                               ": energy deviates from replay by " + std::to_string(dev) + " kWh");
      }
      if (e[k] < lo - tol.battery_kwh || e[k] + s[k] > hi + tol.battery_kwh) {
        report.battery_ok = false;
        report.notes.push_back("route " + route.id + " stop " + std::to_string(k) +
                               ": energy outside safe band");
      }
      if (k + 1 < e.size())
        replay = e[k] + s[k] - route.consumption_kwh_per_mile * route.link_distances[k];
    }
  }
}

ValidationReport validate_solution(const PlanningInstance& inst, const VariableMap& vars,
                                   bool fairness_variant, const PlanSolution& sol,
                                   const ValidationTolerances& tol) {
  ValidationReport rep;

  const ExactnessReport ex = exactness_check(inst.grid, sol, tol.cone_residual, tol.cone_floor);
  rep.max_cone_residual = ex.max_residual;
  rep.min_cone_residual = ex.min_residual;
  rep.relaxation_exact = ex.flagged.empty();
  for (const auto& name : ex.flagged)
    rep.notes.push_back("branch " + name + ": relaxation not tight");

  battery_audit(inst, sol, tol, rep);

  for (const auto& nd : inst.grid.nodes) {
    const double v = sol.v_pu.at(nd.id);
    const double lo = nd.id == inst.grid.slack_id ? inst.grid.v_slack_sq_pu : nd.vmin_sq_pu;
    const double hi = nd.id == inst.grid.slack_id ? inst.grid.v_slack_sq_pu : nd.vmax_sq_pu;
    rep.max_voltage_violation =
        std::max({rep.max_voltage_violation, lo - v, v - hi});
  }
  for (const auto& b : inst.grid.branches) {
    const double l = sol.l_pu.at({b.from, b.to});
    rep.max_current_violation =
        std::max({rep.max_current_violation, -l, l - b.current_sq_limit_pu});
  }
  rep.limits_ok =
      rep.max_voltage_violation <= tol.limit_pu && rep.max_current_violation <= tol.limit_pu;
  if (!rep.limits_ok) rep.notes.push_back("voltage or current bound violated");

  // Independent re-solve with the plan's charging withdrawals.
  std::map<PowerNodeId, PuLoad> extra;
  for (const auto& [key, var] : vars.Yprod) {
    const auto& [rid, m, node] = key;
    if (sol.raw[var] > 0.5)
      extra[node].p += inst.transit.find_route(rid)->charger_kw / inst.grid.base_kw();
  }
  try {
    const SweepResult sweep =
        exact_distflow_resolve(inst.grid, extra, tol.sweep_residual, tol.sweep_max_iters);
    for (const auto& nd : inst.grid.nodes) {
      const double delta =
          std::abs(std::sqrt(sol.v_pu.at(nd.id)) - std::sqrt(sweep.v_pu.at(nd.id)));
      rep.max_resolve_voltage_delta = std::max(rep.max_resolve_voltage_delta, delta);
    }
    rep.resolve_ok = rep.max_resolve_voltage_delta <= tol.resolve_voltage_pu;
    if (!rep.resolve_ok)
      rep.notes.push_back("relaxation voltages deviate from exact re-solve by " +
                          std::to_string(rep.max_resolve_voltage_delta) + " pu");
  } catch (const std::exception& e) {
    rep.resolve_ok = false;
    rep.notes.push_back(std::string("exact re-solve failed: ") + e.what());
  }

  if (fairness_variant && inst.fairness_enabled) {
    rep.jain = sol.jain;
    rep.jain_required = inst.fairness_eta;
    rep.fairness_ok = sol.jain >= inst.fairness_eta - tol.jain_slack;
    if (!rep.fairness_ok) rep.notes.push_back("fairness index below required level");
  }
  return rep;
}

std::string ValidationReport::to_text() const {
  std::ostringstream os;
  auto flag = [](bool ok) { return ok ? "pass" : "FAIL"; };
  os << "relaxation exactness: " << flag(relaxation_exact) << " (max residual "
     << max_cone_residual << ", min " << min_cone_residual << " pu^2)\n";
  os << "battery trajectories: " << flag(battery_ok) << " (max deviation "
     << max_battery_deviation_kwh << " kWh)\n";
  os << "operating limits:     " << flag(limits_ok) << " (voltage "
     << max_voltage_violation << ", current " << max_current_violation << " pu^2 over)\n";
  os << "exact re-solve:       " << flag(resolve_ok) << " (max voltage delta "
     << max_resolve_voltage_delta << " pu)\n";
  if (jain_required > 0.0)
    os << "fairness level:       " << flag(fairness_ok) << " (index " << jain << " vs required "
       << jain_required << ")\n";
  os << "overall:              " << flag(passed()) << "\n";
  for (const auto& n : notes) os << "note: " << n << "\n";
  return os.str();
}

}  // namespace chargeplan
