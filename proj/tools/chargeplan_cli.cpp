// Command-line front end: ingest, synth-grid, plan, sweep, validate, oracle.
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "chargeplan/model.hpp"
#include "chargeplan/pipeline.hpp"
#include "chargeplan/validate.hpp"

using namespace chargeplan;
using nlohmann::json;

namespace {

struct CommonOpts {
  std::string config;
  std::vector<std::string> sets;

  RunConfig load() const { return RunConfig::load(config, sets); }
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("-c,--config", opts.config, "run configuration file (key = value lines)")
      ->check(CLI::ExistingFile);
  cmd->add_option("-s,--set", opts.sets, "override a config key, e.g. -s battery.soc_init=0.2");
}

void write_file(const std::string& path, const std::string& body) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << body;
}

int cmd_ingest(const CommonOpts& opts) {
  const RunConfig cfg = opts.load();
  if (cfg.feed_dir.empty()) throw std::invalid_argument("paths.feed_dir is required");
  const FeedTables feed = load_feed(cfg.feed_dir);
  TransitNetwork net = build_routes(feed, cfg.selection);
  for (auto& route : net.routes) route.dwell_hours_default = cfg.dwell_hours;
  net.candidate_nodes = select_transport_nodes(net, cfg.selection);

  std::printf("feed: %zu stops, %zu trips, %zu stop-time rows\n", feed.stops.size(),
              feed.trips.size(), feed.stop_times.size());
  std::printf("routes built: %zu\n", net.routes.size());
  for (const auto& r : net.routes)
    std::printf("  %-8s %3zu stop visits  %8.2f mi round trip\n", r.id.c_str(), r.stops.size(),
                route_roundtrip_miles(r));
  std::printf("candidate charging stops: %zu\n", net.candidate_nodes.size());

  std::filesystem::create_directories(cfg.output_dir);
  std::string csv = "stop_id,name,lat,lon\n";
  for (const auto& sid : net.candidate_nodes) {
    const BusStop* s = net.find_stop(sid);
    csv += s->id + "," + s->name + "," + std::to_string(s->lat) + "," + std::to_string(s->lon) +
           "\n";
  }
  write_file(cfg.output_dir + "/candidates.csv", csv);
  std::string routes_csv = "route_id,stop_visits,roundtrip_miles,battery_kwh,charger_kw\n";
  for (const auto& r : net.routes)
    routes_csv += r.id + "," + std::to_string(r.stops.size()) + "," +
                  std::to_string(route_roundtrip_miles(r)) + "," + std::to_string(r.battery_kwh) +
                  "," + std::to_string(r.charger_kw) + "\n";
  write_file(cfg.output_dir + "/routes.csv", routes_csv);
  std::printf("wrote %s/candidates.csv and %s/routes.csv\n", cfg.output_dir.c_str(),
              cfg.output_dir.c_str());
  return 0;
}

int cmd_synth_grid(const CommonOpts& opts) {
  const RunConfig cfg = opts.load();
  const PlanningInstance inst = build_instance(cfg);
  double total_len = 0.0;
  for (const auto& b : inst.grid.branches) total_len += b.length_miles;
  std::printf("power nodes: %zu (slack %d)\n", inst.grid.nodes.size(), inst.grid.slack_id);
  std::printf("branches: %zu, total length %.2f mi\n", inst.grid.branches.size(), total_len);
  std::printf("coupling candidates: %zu\n", inst.coupling.size());

  std::filesystem::create_directories(cfg.output_dir);
  std::string csv = "from,to,r_pu,x_pu,current_sq_limit_pu,length_miles\n";
  for (const auto& b : inst.grid.branches)
    csv += std::to_string(b.from) + "," + std::to_string(b.to) + "," + std::to_string(b.r_pu) +
           "," + std::to_string(b.x_pu) + "," + std::to_string(b.current_sq_limit_pu) + "," +
           std::to_string(b.length_miles) + "\n";
  write_file(cfg.output_dir + "/grid_branches.csv", csv);
  std::string cpl = "power_node,stop_id,line_miles,line_cost_usd\n";
  for (const auto& c : inst.coupling)
    cpl += std::to_string(c.power_node_id) + "," + c.stop_id + "," +
           std::to_string(c.line_miles) + "," + std::to_string(c.line_cost_usd) + "\n";
  write_file(cfg.output_dir + "/coupling.csv", cpl);
  export_geojson(cfg.output_dir + "/network.geojson", inst, nullptr);
  std::printf("wrote grid_branches.csv, coupling.csv, network.geojson under %s\n",
              cfg.output_dir.c_str());
  return 0;
}

int cmd_plan(const CommonOpts& opts) {
  const RunConfig cfg = opts.load();
  const RunArtifacts art = run_plan(cfg, true);
  if (!art.solved) {
    std::fprintf(stderr, "plan failed: %s\n", art.error.c_str());
    return 1;
  }
  const PlanSolution& sol = art.sol;
  std::printf("status: %s  objective: %.2f  bound: %.2f  gap: %.2e  nodes: %ld  %.2fs\n",
              sol.status == SolveStatus::Optimal ? "optimal" : "bound-limit", sol.objective,
              sol.best_bound, sol.rel_gap, sol.node_count, sol.wall_seconds);
  std::printf("stations: %zu  piles: %d\n", sol.stations.size(), [&] {
    int p = 0;
    for (const auto& st : sol.stations) p += st.piles;
    return p;
  }());
  for (const auto& st : sol.stations)
    std::printf("  stop %-8s piles %-2d -> power node %d (%.3f mi line)\n", st.stop.c_str(),
                st.piles, st.coupled_node, st.line_miles);
  std::printf("cost breakdown: station %.2f + pile %.2f + line %.2f + loss %.2f\n",
              sol.station_cost, sol.pile_cost, sol.line_cost, sol.loss_cost);
  if (sol.fairness_enabled) std::printf("fairness index: %.6f\n", sol.jain);
  std::fputs(art.report.to_text().c_str(), stdout);
  std::printf("reports written to %s\n", cfg.output_dir.c_str());
  return art.report.passed() ? 0 : 1;
}

int cmd_sweep(const CommonOpts& opts, const std::string& dimension) {
  const RunConfig cfg = opts.load();
  const std::vector<SweepRow> rows = sweep(cfg, dimension, true);
  std::printf("%-10s %-12s %-14s %-8s %-6s %-10s %s\n", "parameter", "status", "total_cost",
              "stations", "piles", "jain", "error");
  int rc = 0;
  for (const auto& row : rows) {
    std::printf("%-10.4g %-12s %-14.2f %-8d %-6d %-10.6f %s\n", row.parameter,
                row.ok ? "ok" : "error", row.total_cost, row.stations, row.piles, row.jain,
                row.error.c_str());
    if (!row.ok) rc = 1;
  }
  std::printf("wrote %s/sweep_%s.csv\n", cfg.output_dir.c_str(), dimension.c_str());
  return rc;
}

int cmd_validate(const CommonOpts& opts, const std::string& run_dir) {
  const RunConfig cfg = opts.load();
  std::ifstream in(run_dir + "/result.json");
  if (!in) throw std::runtime_error("cannot open " + run_dir + "/result.json");
  json j;
  in >> j;
  if (j.value("status", "error") == "error")
    throw std::runtime_error("run at " + run_dir + " did not produce a solution");

  const PlanningInstance inst = build_instance(cfg);
  const bool fairness = j.value("fairness_enabled", false);
  if (fairness != cfg.fairness_enabled)
    throw std::runtime_error("run artifacts do not match this configuration (fairness flag)");
  const ModelBuild mb = build_model(inst, fairness);

  SolveResult res;
  res.has_incumbent = true;
  res.incumbent = j.at("raw_point").get<std::vector<double>>();
  if (static_cast<int>(res.incumbent.size()) != mb.prog.num_vars())
    throw std::runtime_error("run artifacts do not match this configuration (variable count)");
  res.incumbent_obj = j.at("objective").get<double>();
  res.best_bound = j.value("best_bound", res.incumbent_obj);
  res.rel_gap = j.value("rel_gap", 0.0);
  res.node_count = j.value("node_count", 0L);
  res.wall_seconds = j.value("wall_seconds", 0.0);
  res.bound_certified = j.value("bound_certified", true);
  res.status = j.value("status", "optimal") == "optimal" ? SolveStatus::Optimal
                                                         : SolveStatus::BoundLimit;

  const PlanSolution sol = decode_solution(inst, mb.vars, fairness, res);
  const ValidationReport report = validate_solution(inst, mb.vars, fairness, sol);
  std::fputs(report.to_text().c_str(), stdout);
  return report.passed() ? 0 : 1;
}

int cmd_oracle(const CommonOpts& opts, std::vector<double> soc_values) {
  const RunConfig cfg = opts.load();
  if (cfg.feed_dir.empty()) throw std::invalid_argument("paths.feed_dir is required");
  const FeedTables feed = load_feed(cfg.feed_dir);
  TransitNetwork net = build_routes(feed, cfg.selection);
  for (auto& route : net.routes) route.dwell_hours_default = cfg.dwell_hours;
  for (const auto& rid : cfg.sixty_foot)
    for (auto& route : net.routes)
      if (route.id == rid) {
        route.coach_class = CoachClass::SixtyFoot;
        route.apply_coach_defaults();
      }
  if (soc_values.empty()) soc_values = {cfg.battery.soc_init};

  std::printf("route_id,roundtrip_miles");
  for (double v : soc_values) std::printf(",charges@%.2g", v);
  std::printf("\n");
  for (const auto& route : net.routes) {
    std::printf("%s,%.2f", route.id.c_str(), route_roundtrip_miles(route));
    for (double v : soc_values) {
      BatteryPolicy policy = cfg.battery;
      policy.soc_init = v;
      std::printf(",%d", min_charges_oracle(route, policy));
    }
    std::printf("\n");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"BEB fast-charging station planning over coupled transit and power networks"};
  app.require_subcommand(1);

  CommonOpts ingest_opts, grid_opts, plan_opts, sweep_opts, validate_opts, oracle_opts;
  std::string sweep_dimension = "soc_init";
  std::string validate_run_dir;
  std::vector<double> oracle_soc;

  CLI::App* ingest = app.add_subcommand("ingest", "parse a feed and select candidate stops");
  add_common(ingest, ingest_opts);

  CLI::App* synth = app.add_subcommand("synth-grid", "synthesize the virtual power grid");
  add_common(synth, grid_opts);

  CLI::App* plan = app.add_subcommand("plan", "solve the siting/sizing model and write reports");
  add_common(plan, plan_opts);

  CLI::App* swp = app.add_subcommand("sweep", "solve across a parameter list");
  add_common(swp, sweep_opts);
  swp->add_option("-d,--dimension", sweep_dimension, "soc_init or eta")
      ->check(CLI::IsMember({"soc_init", "eta"}));

  CLI::App* val = app.add_subcommand("validate", "re-check the physics of a finished run");
  add_common(val, validate_opts);
  val->add_option("-r,--run-dir", validate_run_dir, "directory holding result.json")->required();

  CLI::App* orc = app.add_subcommand("oracle", "closed-form minimum charge counts per route");
  add_common(orc, oracle_opts);
  orc->add_option("--soc-init", oracle_soc, "initial SOC values to tabulate");

  CLI11_PARSE(app, argc, argv);

  try {
    if (ingest->parsed()) return cmd_ingest(ingest_opts);
    if (synth->parsed()) return cmd_synth_grid(grid_opts);
    if (plan->parsed()) return cmd_plan(plan_opts);
    if (swp->parsed()) return cmd_sweep(sweep_opts, sweep_dimension);
    if (val->parsed()) return cmd_validate(validate_opts, validate_run_dir);
    if (orc->parsed()) return cmd_oracle(oracle_opts, oracle_soc);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
