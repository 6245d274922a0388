// Command-line front end: run one scheduler, compare several, generate random
// scenarios, or ask the exhaustive oracle.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bass/bass.hpp"

namespace {

struct CommonOpts {
  std::string scenario = "example1";
  std::optional<std::uint64_t> seed;
  std::optional<double> slot_duration;
  std::string output = "json";
};

bass::Scenario load(const CommonOpts& opts) {
  bass::Scenario s = bass::load_scenario(opts.scenario);
  if (opts.slot_duration) {
    s.slot_duration = *opts.slot_duration;
    bass::validate_scenario(s);
  }
  return s;
}

std::uint64_t effective_seed(const CommonOpts& opts, const bass::Scenario& s) {
  return opts.seed ? *opts.seed : s.seed;
}

int run_command(const CommonOpts& opts, const std::string& scheduler, const std::string& ledger_csv_path) {
  bass::Scenario scenario = load(opts);
  bass::RunReport report = bass::run_scenario(scenario, scheduler, effective_seed(opts, scenario));
  if (opts.output == "json")
    std::cout << bass::report_json(report).dump(2) << "\n";
  else if (opts.output == "csv")
    std::cout << bass::report_csv(report);
  else if (opts.output == "gantt")
    std::cout << "scenario " << report.scenario << ", scheduler " << report.scheduler << ", makespan "
              << bass::detail::fixed3(report.makespan) << " s\n"
              << bass::render_gantt(report.timeline, scenario.slot_duration);
  else
    bass::fail(bass::Errc::validation_error, "unknown output format '" + opts.output + "'");
  if (!ledger_csv_path.empty()) {
    bass::Topology topo = bass::build_topology(scenario.topology);
    std::vector<bass::LinkId> links;
    for (const bass::Link& l : topo.links()) links.push_back(l.id);
    bass::SlotLedger replay(scenario.slot_duration);
    for (const bass::Assignment& a : report.schedule.assignments)
      if (a.reservation)
        replay.reserve_slots(a.reservation->task, a.reservation->path, a.reservation->first_slot,
                             a.reservation->last_slot, a.reservation->fraction, a.reservation->start,
                             a.reservation->end, a.reservation->size_mb);
    std::ofstream out(ledger_csv_path);
    if (!out) bass::fail(bass::Errc::validation_error, "cannot write '" + ledger_csv_path + "'");
    out << replay.occupancy_csv(links);
  }
  std::cerr << "runtime: " << bass::detail::fixed3(report.runtime_ms) << " ms\n";
  return 0;
}

int compare_command(const CommonOpts& opts, const std::vector<std::string>& schedulers) {
  bass::Scenario scenario = load(opts);
  std::uint64_t seed = effective_seed(opts, scenario);
  bass::Comparison cmp = bass::compare_schedulers(scenario, schedulers, seed);
  if (opts.output == "json")
    std::cout << bass::comparison_json(cmp).dump(2) << "\n";
  else if (opts.output == "csv")
    std::cout << bass::comparison_csv(cmp);
  else if (opts.output == "table")
    std::cout << bass::comparison_table(cmp);
  else if (opts.output == "gantt")
    for (const bass::Comparison::Entry& e : cmp.entries) {
      bass::RunReport r = bass::run_scenario(scenario, e.scheduler, seed);
      std::cout << e.scheduler << " (makespan " << bass::detail::fixed3(e.makespan) << " s)\n"
                << bass::render_gantt(r.timeline, scenario.slot_duration) << "\n";
    }
  else
    bass::fail(bass::Errc::validation_error, "unknown output format '" + opts.output + "'");
  return 0;
}

int oracle_command(const CommonOpts& opts, std::uint64_t budget) {
  bass::Scenario scenario = load(opts);
  bass::Topology topo = bass::build_topology(scenario.topology);
  bass::Job job = scenario.job();
  bass::Schedule best = bass::brute_force_optimal(job, topo, scenario.node_states(), scenario.transfer_model(),
                                                  scenario.slot_duration, budget);
  if (opts.output == "json") {
    nlohmann::json j{{"schema_version", 1}, {"scenario", scenario.name}, {"optimal_makespan", best.makespan}};
    j["assignments"] = nlohmann::json::array();
    for (const bass::Assignment& a : best.assignments)
      j["assignments"].push_back({{"task", a.task}, {"node", a.node}});
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "optimal makespan " << bass::detail::fixed3(best.makespan) << " s\n";
    for (const bass::Assignment& a : best.assignments)
      std::cout << "  task " << a.task << " -> node " << a.node << "\n";
  }
  return 0;
}

int generate_command(const bass::GeneratorParams& params, const std::string& out_dir) {
  std::vector<bass::Scenario> scenarios = bass::generate_scenarios(params);
  std::filesystem::create_directories(out_dir);
  for (const bass::Scenario& s : scenarios) {
    std::filesystem::path path = std::filesystem::path(out_dir) / (s.name + ".json");
    std::ofstream out(path);
    if (!out) bass::fail(bass::Errc::validation_error, "cannot write '" + path.string() + "'");
    out << bass::scenario_json(s).dump(2) << "\n";
    std::cout << path.string() << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bandwidth-aware cluster scheduling simulator"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string scheduler = "bass";
  std::string ledger_csv;
  std::vector<std::string> schedulers;
  std::uint64_t budget = 100000;

  auto add_common = [&](CLI::App* cmd, bool with_output = true) {
    cmd->add_option("--scenario", opts.scenario, "scenario file path or built-in name (example1)");
    cmd->add_option("--seed", opts.seed, "override the scenario's seed");
    cmd->add_option("--slot-duration", opts.slot_duration, "override the scenario's slot duration (seconds)");
    if (with_output) cmd->add_option("--output", opts.output, "json|csv|gantt (compare also: table)");
  };

  CLI::App* run = app.add_subcommand("run", "run one scheduler on a scenario");
  add_common(run);
  run->add_option("--scheduler", scheduler, "hds|bar|bass|prebass");
  run->add_option("--ledger-csv", ledger_csv, "also dump per-link slot occupancy to this CSV file");

  CLI::App* compare = app.add_subcommand("compare", "run several schedulers on identical fresh state");
  add_common(compare);
  compare->add_option("--scheduler", schedulers, "scheduler to include (repeatable; default: all four)");

  CLI::App* oracle = app.add_subcommand("oracle", "exhaustive optimal makespan (small instances)");
  add_common(oracle);
  oracle->add_option("--budget", budget, "max assignments to enumerate");

  bass::GeneratorParams params;
  std::string out_dir = "generated";
  double size_min = 64, size_max = 64, tp_min = 9, tp_max = 9, idle_min = 0, idle_max = 0;
  std::optional<double> fixed_tm;
  CLI::App* generate = app.add_subcommand("generate", "write random scenarios as JSON files");
  generate->add_option("--count", params.scenario_count, "number of scenarios");
  generate->add_option("--nodes", params.node_count, "compute node count");
  generate->add_option("--tasks", params.task_count, "task count");
  generate->add_option("--replicas", params.replica_count, "replicas per input split");
  generate->add_option("--storage-nodes", params.storage_node_count,
                       "replicas land on the first K nodes only (default: all)");
  generate->add_option("--seed", params.seed, "generator seed");
  generate->add_option("--size-min", size_min, "split size lower bound (MB)");
  generate->add_option("--size-max", size_max, "split size upper bound (MB)");
  generate->add_option("--tp-min", tp_min, "compute time lower bound (s)");
  generate->add_option("--tp-max", tp_max, "compute time upper bound (s)");
  generate->add_option("--idle-min", idle_min, "initial idle lower bound (s)");
  generate->add_option("--idle-max", idle_max, "initial idle upper bound (s)");
  generate->add_option("--capacity", params.link_capacity_mbps, "link capacity (Mbps)");
  generate->add_option("--slot-duration", params.slot_duration, "slot duration (s)");
  generate->add_option("--fixed-transfer-time", fixed_tm, "fixed per-block transfer time (s)");
  generate->add_option("--out", out_dir, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return run_command(opts, scheduler, ledger_csv);
    if (compare->parsed()) return compare_command(opts, schedulers);
    if (oracle->parsed()) return oracle_command(opts, budget);
    params.split_size_mb = {size_min, size_max};
    params.compute_time_s = {tp_min, tp_max};
    params.initial_idle_s = {idle_min, idle_max};
    params.fixed_transfer_time = fixed_tm;
    return generate_command(params, out_dir);
  } catch (const bass::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return bass::exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
