#include "chargeplan/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace chargeplan {

namespace {

std::string pos_tag(const RouteId& r, int k) { return r + "[" + std::to_string(k) + "]"; }

/// Stops of the route that are station candidates, with the positions
/// (0..n-2) at which the bus dwells there.
std::map<StopId, std::vector<int>> eligible_positions(const PlanningInstance& inst,
                                                      const BusRoute& route) {
  std::map<StopId, std::vector<int>> out;
  for (size_t k = 0; k + 1 < route.stops.size(); ++k)
    if (inst.transit.candidate_nodes.count(route.stops[k]))
      out[route.stops[k]].push_back(static_cast<int>(k));
  return out;
}

double charger_pu(const BusRoute& route, const PowerGrid& grid) {
  return route.charger_kw / grid.base_kw();
}

}  // namespace

void PlanningInstance::validate() const {
  transit.validate();
  grid.validate();
  econ.validate();
  battery.validate();
  if (transit.routes.empty()) throw std::invalid_argument("instance has no routes");
  if (transit.candidate_nodes.empty()) throw std::invalid_argument("instance has no candidate stops");
  for (const auto& c : coupling) {
    if (!grid.find_node(c.power_node_id))
      throw std::invalid_argument("coupling references unknown power node");
    if (!transit.candidate_nodes.count(c.stop_id))
      throw std::invalid_argument("coupling references non-candidate stop " + c.stop_id);
  }
  if (fairness_enabled) {
    zones.validate();
    if (fairness_budget < 0 || fairness_budget > static_cast<int>(transit.routes.size()))
      throw std::invalid_argument("fairness budget outside route count");
  }
}

VariableMap create_variables(const PlanningInstance& inst, bool fairness_variant,
                             ConicProgram& prog) {
  VariableMap vars;
  vars.candidates.assign(inst.transit.candidate_nodes.begin(), inst.transit.candidate_nodes.end());

  for (const auto& m : vars.candidates) {
    vars.X[m] = prog.add_binary("X[" + m + "]");
    vars.beta[m] = prog.add_variable("beta[" + m + "]", 0.0,
                                     static_cast<double>(inst.battery.big_m), VarKind::Integer);
  }
  for (const auto& route : inst.transit.routes) {
    for (const auto& [m, positions] : eligible_positions(inst, route))
      vars.y[{route.id, m}] = prog.add_binary("y[" + route.id + "," + m + "]");
  }
  for (const auto& c : inst.coupling)
    if (!vars.psi.count({c.power_node_id, c.stop_id}))
      vars.psi[{c.power_node_id, c.stop_id}] =
          prog.add_binary("psi[" + std::to_string(c.power_node_id) + "," + c.stop_id + "]");
  for (const auto& [key, yvar] : vars.y) {
    const auto& [rid, m] = key;
    for (const auto& c : inst.coupling)
      if (c.stop_id == m)
        vars.Yprod[{rid, m, c.power_node_id}] = prog.add_binary(
            "Y[" + rid + "," + m + "," + std::to_string(c.power_node_id) + "]");
  }
  if (fairness_variant)
    for (const auto& route : inst.transit.routes)
      vars.I[route.id] = prog.add_binary("I[" + route.id + "]");

  for (const auto& route : inst.transit.routes) {
    const double cap = route.battery_kwh;
    const double elb = fairness_variant ? 0.0 : inst.battery.soc_min * cap;
    const double eub = inst.battery.soc_max * cap;
    const int n = static_cast<int>(route.stops.size());
    for (int k = 0; k < n; ++k)
      vars.e[{route.id, k}] = prog.add_variable("e[" + pos_tag(route.id, k) + "]", elb, eub);
    for (const auto& [m, positions] : eligible_positions(inst, route))
      for (int k : positions)
        vars.s[{route.id, k}] = prog.add_variable(
            "s[" + pos_tag(route.id, k) + "]", 0.0, route.charger_kw * route.dwell_hours_at(m));
  }

  for (const auto& b : inst.grid.branches) {
    const std::pair<PowerNodeId, PowerNodeId> key{b.from, b.to};
    const std::string tag = std::to_string(b.from) + "-" + std::to_string(b.to);
    vars.P[key] = prog.add_variable("P[" + tag + "]", -10.0, 10.0);
    vars.Q[key] = prog.add_variable("Q[" + tag + "]", -10.0, 10.0);
    vars.l[key] = prog.add_variable("l[" + tag + "]", 0.0, b.current_sq_limit_pu);
  }
  for (const auto& nd : inst.grid.nodes) {
    const bool slack = nd.id == inst.grid.slack_id;
    const double lb = slack ? inst.grid.v_slack_sq_pu : nd.vmin_sq_pu;
    const double ub = slack ? inst.grid.v_slack_sq_pu : nd.vmax_sq_pu;
    vars.v[nd.id] = prog.add_variable("v[" + std::to_string(nd.id) + "]", lb, ub);
  }
  if (fairness_variant)
    for (int h = 0; h < inst.zones.zone_count(); ++h)
      vars.w.push_back(prog.add_variable("w[" + inst.zones.zone_names[h] + "]", 0.0, 1.0));
  return vars;
}

void build_objective(const PlanningInstance& inst, const VariableMap& vars, ConicProgram& prog) {
  for (const auto& m : vars.candidates) {
    prog.set_objective(vars.X.at(m), inst.econ.station_cost);
    prog.set_objective(vars.beta.at(m), inst.econ.pile_cost);
    bool any = false;
    for (const auto& c : inst.coupling) any = any || c.stop_id == m;
    if (!any) throw std::invalid_argument("missing coupling candidates for stop " + m);
  }
  for (const auto& c : inst.coupling) {
    const auto it = vars.psi.find({c.power_node_id, c.stop_id});
    if (it != vars.psi.end() && c.line_cost_usd != 0.0)
      prog.set_objective(it->second, c.line_cost_usd);
  }
  const double horizon = inst.econ.loss_hours_total() * inst.econ.electricity_price;
  for (const auto& b : inst.grid.branches)
    prog.set_objective(vars.l.at({b.from, b.to}), horizon * b.r_pu * inst.grid.base_kw());
}

int add_siting_constraints(const PlanningInstance& inst, const VariableMap& vars,
                           ConicProgram& prog) {
  const int before = prog.num_rows();
  for (const auto& [key, yvar] : vars.y) {
    auto& row = prog.add_row("use_needs_station[" + key.first + "," + key.second + "]",
                             RowSense::LE, 0.0);
    row.coeffs = {{yvar, 1.0}, {vars.X.at(key.second), -1.0}};
  }
  for (const auto& m : vars.candidates) {
    auto& cap = prog.add_row("piles_need_station[" + m + "]", RowSense::LE, 0.0);
    cap.coeffs = {{vars.beta.at(m), 1.0},
                  {vars.X.at(m), -static_cast<double>(inst.battery.big_m)}};
    auto& piles = prog.add_row("piles_cover_routes[" + m + "]", RowSense::LE, 0.0);
    piles.coeffs.emplace_back(vars.beta.at(m), -1.0);
    for (const auto& [key, yvar] : vars.y)
      if (key.second == m) piles.coeffs.emplace_back(yvar, 1.0);
    auto& link = prog.add_row("station_coupled_once[" + m + "]", RowSense::EQ, 0.0);
    link.coeffs.emplace_back(vars.X.at(m), -1.0);
    for (const auto& [pk, pvar] : vars.psi)
      if (pk.second == m) link.coeffs.emplace_back(pvar, 1.0);
  }
  return prog.num_rows() - before;
}

int add_energy_constraints(const PlanningInstance& inst, const VariableMap& vars,
                           bool fairness_variant, ConicProgram& prog) {
  const int before = prog.num_rows();
  for (const auto& route : inst.transit.routes) {
    const double cap = route.battery_kwh;
    const double usable = (inst.battery.soc_max - inst.battery.soc_min) * cap;
    for (size_t k = 0; k < route.link_distances.size(); ++k)
      if (route.consumption_kwh_per_mile * route.link_distances[k] > usable + 1e-9)
        throw std::invalid_argument("infeasible link " + std::to_string(k) + " on route " +
                                    route.id);

    const int n = static_cast<int>(route.stops.size());
    const int ivar = fairness_variant ? vars.I.at(route.id) : -1;
    {
      auto& origin = prog.add_row("origin_energy[" + route.id + "]", RowSense::EQ,
                                  fairness_variant ? 0.0 : inst.battery.soc_init * cap);
      origin.coeffs.emplace_back(vars.e.at({route.id, 0}), 1.0);
      if (fairness_variant) origin.coeffs.emplace_back(ivar, -inst.battery.soc_init * cap);
    }
    for (int k = 0; k + 1 < n; ++k) {
      const double burn = route.consumption_kwh_per_mile * route.link_distances[k];
      auto& cons = prog.add_row("conserve[" + pos_tag(route.id, k) + "]", RowSense::EQ,
                                fairness_variant ? 0.0 : -burn);
      cons.coeffs.emplace_back(vars.e.at({route.id, k + 1}), 1.0);
      cons.coeffs.emplace_back(vars.e.at({route.id, k}), -1.0);
      const auto sit = vars.s.find({route.id, k});
      if (sit != vars.s.end()) cons.coeffs.emplace_back(sit->second, -1.0);
      if (fairness_variant) cons.coeffs.emplace_back(ivar, burn);
    }
    for (int k = 0; k < n; ++k) {
      const auto sit = vars.s.find({route.id, k});
      const bool has_s = sit != vars.s.end();
      if (fairness_variant) {
        auto& floor_row = prog.add_row("soc_floor[" + pos_tag(route.id, k) + "]", RowSense::GE, 0.0);
        floor_row.coeffs = {{vars.e.at({route.id, k}), 1.0}, {ivar, -inst.battery.soc_min * cap}};
      }
      if (fairness_variant || has_s) {
        auto& ceil_row = prog.add_row("soc_ceiling[" + pos_tag(route.id, k) + "]", RowSense::LE,
                                      fairness_variant ? 0.0 : inst.battery.soc_max * cap);
        ceil_row.coeffs.emplace_back(vars.e.at({route.id, k}), 1.0);
        if (has_s) ceil_row.coeffs.emplace_back(sit->second, 1.0);
        if (fairness_variant) ceil_row.coeffs.emplace_back(ivar, -inst.battery.soc_max * cap);
      }
    }
    for (const auto& [m, positions] : eligible_positions(inst, route)) {
      const int yvar = vars.y.at({route.id, m});
      for (int k : positions) {
        auto& cap_row = prog.add_row("charge_cap[" + pos_tag(route.id, k) + "]", RowSense::LE, 0.0);
        cap_row.coeffs = {{vars.s.at({route.id, k}), 1.0},
                          {yvar, -route.charger_kw * route.dwell_hours_at(m)}};
      }
      if (fairness_variant) {
        auto& gate = prog.add_row("use_needs_selection[" + route.id + "," + m + "]", RowSense::LE,
                                  0.0);
        gate.coeffs = {{yvar, 1.0}, {ivar, -1.0}};
      }
    }
    if (fairness_variant) {
      auto& must_charge = prog.add_row("selection_needs_charging[" + route.id + "]", RowSense::LE,
                                       0.0);
      must_charge.coeffs.emplace_back(ivar, 1.0);
      for (const auto& [key, yvar] : vars.y)
        if (key.first == route.id) must_charge.coeffs.emplace_back(yvar, -1.0);
    }
  }
  return prog.num_rows() - before;
}

int add_powerflow_constraints(const PlanningInstance& inst, const VariableMap& vars,
                              ConicProgram& prog) {
  if (!inst.grid.is_radial()) throw std::invalid_argument("topology not radial");
  const int before = prog.num_rows();

  // Charging withdrawal per power node: sum of charger ratings gated by the
  // station-and-line product binaries.
  std::map<PowerNodeId, std::vector<std::pair<int, double>>> charge_terms;
  for (const auto& [key, Yvar] : vars.Yprod) {
    const auto& [rid, m, node] = key;
    const BusRoute* route = inst.transit.find_route(rid);
    charge_terms[node].emplace_back(Yvar, charger_pu(*route, inst.grid));
  }

  for (const auto& b : inst.grid.branches) {
    const std::pair<PowerNodeId, PowerNodeId> key{b.from, b.to};
    const std::string tag = std::to_string(b.from) + "-" + std::to_string(b.to);
    const PowerNode* to = inst.grid.find_node(b.to);

    auto& bp = prog.add_row("balance_p[" + tag + "]", RowSense::EQ, to->load_pu.p);
    bp.coeffs = {{vars.P.at(key), 1.0}, {vars.l.at(key), -b.r_pu}};
    for (const auto& b2 : inst.grid.branches)
      if (b2.from == b.to) bp.coeffs.emplace_back(vars.P.at({b2.from, b2.to}), -1.0);
    const auto ct = charge_terms.find(b.to);
    if (ct != charge_terms.end())
      for (auto [Yvar, pu] : ct->second) bp.coeffs.emplace_back(Yvar, -pu);

    auto& bq = prog.add_row("balance_q[" + tag + "]", RowSense::EQ, to->load_pu.q);
    bq.coeffs = {{vars.Q.at(key), 1.0}, {vars.l.at(key), -b.x_pu}};
    for (const auto& b2 : inst.grid.branches)
      if (b2.from == b.to) bq.coeffs.emplace_back(vars.Q.at({b2.from, b2.to}), -1.0);

    auto& drop = prog.add_row("voltage_drop[" + tag + "]", RowSense::EQ, 0.0);
    drop.coeffs = {{vars.v.at(b.to), 1.0},
                   {vars.v.at(b.from), -1.0},
                   {vars.P.at(key), 2.0 * b.r_pu},
                   {vars.Q.at(key), 2.0 * b.x_pu},
                   {vars.l.at(key), -(b.r_pu * b.r_pu + b.x_pu * b.x_pu)}};

    auto& cone = prog.add_soc("current[" + tag + "]");
    cone.head.add(vars.l.at(key), 1.0).add(vars.v.at(b.from), 1.0);
    cone.tail.resize(3);
    cone.tail[0].add(vars.P.at(key), 2.0);
    cone.tail[1].add(vars.Q.at(key), 2.0);
    cone.tail[2].add(vars.l.at(key), 1.0).add(vars.v.at(b.from), -1.0);
  }

  // Exact product linearization: Y = y * psi on binaries.
  for (const auto& [key, Yvar] : vars.Yprod) {
    const auto& [rid, m, node] = key;
    const int yvar = vars.y.at({rid, m});
    const int pvar = vars.psi.at({node, m});
    const std::string tag = rid + "," + m + "," + std::to_string(node);
    prog.add_row("prod_le_use[" + tag + "]", RowSense::LE, 0.0).coeffs = {{Yvar, 1.0},
                                                                          {yvar, -1.0}};
    prog.add_row("prod_le_line[" + tag + "]", RowSense::LE, 0.0).coeffs = {{Yvar, 1.0},
                                                                           {pvar, -1.0}};
    prog.add_row("prod_ge_overlap[" + tag + "]", RowSense::GE, -1.0).coeffs = {
        {Yvar, 1.0}, {yvar, -1.0}, {pvar, -1.0}};
  }
  return prog.num_rows() - before;
}

int add_fairness_constraints(const PlanningInstance& inst, const VariableMap& vars,
                             const ZonePartition& zones, ConicProgram& prog) {
  const int H = zones.zone_count();
  const double eta = inst.fairness_eta;
  if (eta < 1.0 / H - 1e-12 || eta > 1.0 + 1e-12)
    throw std::invalid_argument("fairness level out of range");
  const int before = prog.num_rows();

  const ZoneMiles den = zone_denominators(inst.transit, zones);
  for (int h = 0; h < H; ++h) {
    if (!(den.miles[h] > 0.0)) throw std::invalid_argument("empty zone " + zones.zone_names[h]);
    auto& row = prog.add_row("zone_ratio[" + zones.zone_names[h] + "]", RowSense::EQ, 0.0);
    row.coeffs.emplace_back(vars.w[h], 1.0);
    for (const auto& route : inst.transit.routes) {
      double miles = 0.0;
      for (size_t l = 0; l < route.link_distances.size(); ++l) {
        const auto it = zones.link_weights.find({route.id, static_cast<int>(l)});
        if (it == zones.link_weights.end())
          throw std::invalid_argument("zone partition does not cover route " + route.id);
        for (const auto& zw : it->second)
          if (zones.zone_index(zw.zone) == h) miles += zw.weight * route.link_distances[l];
      }
      if (miles > 0.0) row.coeffs.emplace_back(vars.I.at(route.id), -miles / den.miles[h]);
    }
  }

  auto& budget = prog.add_row("selection_budget",
                              inst.budget_is_equality ? RowSense::EQ : RowSense::LE,
                              static_cast<double>(inst.fairness_budget));
  for (const auto& route : inst.transit.routes)
    budget.coeffs.emplace_back(vars.I.at(route.id), 1.0);

  auto& cone = prog.add_soc("fairness_level");
  const double head_coef = std::sqrt(1.0 / (H * eta));
  for (int h = 0; h < H; ++h) {
    cone.head.add(vars.w[h], head_coef);
    cone.tail.push_back(AffineExpr::of(vars.w[h]));
  }
  return prog.num_rows() - before;
}

ModelBuild build_model(const PlanningInstance& inst, bool fairness_variant) {
  inst.validate();
  ModelBuild mb;
  mb.vars = create_variables(inst, fairness_variant, mb.prog);
  build_objective(inst, mb.vars, mb.prog);
  add_siting_constraints(inst, mb.vars, mb.prog);
  add_energy_constraints(inst, mb.vars, fairness_variant, mb.prog);
  add_powerflow_constraints(inst, mb.vars, mb.prog);
  if (fairness_variant) add_fairness_constraints(inst, mb.vars, inst.zones, mb.prog);
  mb.prog.validate();
  return mb;
}

PlanSolution decode_solution(const PlanningInstance& inst, const VariableMap& vars,
                             bool fairness_variant, const SolveResult& res) {
  if (!res.has_incumbent) throw std::runtime_error("no incumbent to decode");
  const std::vector<double>& x = res.incumbent;
  auto bin = [&](int var) { return x[var] > 0.5; };

  PlanSolution sol;
  sol.status = res.status;
  sol.objective = res.incumbent_obj;
  sol.best_bound = res.best_bound;
  sol.rel_gap = res.rel_gap;
  sol.node_count = res.node_count;
  sol.wall_seconds = res.wall_seconds;
  sol.bound_certified = res.bound_certified;
  sol.fairness_enabled = fairness_variant;
  sol.raw = x;

  for (const auto& m : vars.candidates) {
    if (!bin(vars.X.at(m))) continue;
    StationPlan st;
    st.stop = m;
    st.piles = static_cast<int>(std::llround(x[vars.beta.at(m)]));
    bool coupled = false;
    for (const auto& c : inst.coupling) {
      if (c.stop_id != m) continue;
      const auto it = vars.psi.find({c.power_node_id, c.stop_id});
      if (it != vars.psi.end() && bin(it->second) && !coupled) {
        st.coupled_node = c.power_node_id;
        st.line_miles = c.line_miles;
        st.line_cost_usd = c.line_cost_usd;
        coupled = true;
      }
    }
    sol.stations.push_back(std::move(st));
  }

  for (const auto& route : inst.transit.routes) {
    if (fairness_variant && !bin(vars.I.at(route.id))) continue;
    sol.selected_routes.insert(route.id);
  }
  for (const auto& route : inst.transit.routes) {
    const int n = static_cast<int>(route.stops.size());
    auto& energy = sol.energy_kwh[route.id];
    auto& charge = sol.charge_kwh[route.id];
    for (int k = 0; k < n; ++k) {
      energy.push_back(x[vars.e.at({route.id, k})]);
      const auto sit = vars.s.find({route.id, k});
      charge.push_back(sit == vars.s.end() ? 0.0 : x[sit->second]);
    }
  }

  for (const auto& [key, var] : vars.P) sol.P_pu[key] = x[var];
  for (const auto& [key, var] : vars.Q) sol.Q_pu[key] = x[var];
  for (const auto& [key, var] : vars.l) sol.l_pu[key] = x[var];
  for (const auto& [key, var] : vars.v) sol.v_pu[key] = x[var];

  sol.station_cost = inst.econ.station_cost * static_cast<double>(sol.stations.size());
  for (const auto& st : sol.stations) {
    sol.pile_cost += inst.econ.pile_cost * st.piles;
    sol.line_cost += st.line_cost_usd;
  }
  const double horizon = inst.econ.loss_hours_total() * inst.econ.electricity_price;
  for (const auto& b : inst.grid.branches)
    sol.loss_cost += horizon * b.r_pu * inst.grid.base_kw() * sol.l_pu[{b.from, b.to}];

  if (fairness_variant) {
    sol.w = zone_ratios(sol.selected_routes, inst.transit, inst.zones);
    bool any = false;
    for (double x : sol.w) any = any || x > 0.0;
    sol.jain = any ? jain_index(sol.w, inst.zones.zone_count()) : 0.0;
  }
  return sol;
}

}  // namespace chargeplan
