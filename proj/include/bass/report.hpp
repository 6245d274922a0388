#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include <json.hpp>

#include "bass/engine.hpp"
#include "bass/scenario.hpp"
#include "bass/schedulers.hpp"

namespace bass {

inline const std::vector<std::string>& scheduler_names() {
  static const std::vector<std::string> names{"hds", "bar", "bass", "prebass"};
  return names;
}

/// Outcome of one scheduler on one scenario. The wall-clock runtime is kept
/// for display only and never serialized, so reports stay byte-reproducible.
struct RunReport {
  std::string scenario;
  std::string scheduler;
  std::uint64_t seed = 0;
  double makespan = 0.0;
  double locality_ratio = 1.0;  // local tasks / total tasks
  Schedule schedule;
  Timeline timeline;
  double runtime_ms = 0.0;
};

inline RunReport run_scenario(const Scenario& scenario, const std::string& scheduler, std::uint64_t seed) {
  if (std::find(scheduler_names().begin(), scheduler_names().end(), scheduler) == scheduler_names().end())
    fail(Errc::validation_error, "unknown scheduler '" + scheduler + "' (use hds|bar|bass|prebass)");

  Topology topo = build_topology(scenario.topology);
  Job job = scenario.job();
  std::vector<NodeState> states = scenario.node_states();
  SlotLedger ledger(scenario.slot_duration);
  TransferModel model = scenario.transfer_model();

  auto t0 = std::chrono::steady_clock::now();
  Schedule schedule;
  if (scheduler == "hds")
    schedule = schedule_hds(job, topo, ledger, states, model, seed);
  else if (scheduler == "bar")
    schedule = schedule_bar(job, topo, ledger, states, model);
  else if (scheduler == "bass")
    schedule = schedule_bass(job, topo, ledger, states, model);
  else
    schedule = schedule_prebass(job, topo, ledger, states, model);
  auto t1 = std::chrono::steady_clock::now();

  RunReport report;
  report.scenario = scenario.name;
  report.scheduler = scheduler;
  report.seed = seed;
  report.timeline = execute(schedule, job, topo, states, scenario.slot_duration);
  report.makespan = schedule.makespan;
  std::size_t local = 0;
  for (const Assignment& a : schedule.assignments)
    if (!a.source) ++local;
  report.locality_ratio = schedule.assignments.empty()
                              ? 1.0
                              : static_cast<double>(local) / static_cast<double>(schedule.assignments.size());
  report.schedule = std::move(schedule);
  report.runtime_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  return report;
}

/// Side-by-side makespans of several schedulers on identical fresh state,
/// assembled in scheduler-name order.
struct Comparison {
  std::string scenario;
  std::uint64_t seed = 0;
  struct Entry {
    std::string scheduler;
    double makespan = 0.0;
    double locality_ratio = 1.0;
  };
  std::vector<Entry> entries;
};

inline Comparison compare_schedulers(const Scenario& scenario, std::vector<std::string> schedulers,
                                     std::uint64_t seed) {
  if (schedulers.empty()) schedulers = scheduler_names();
  std::sort(schedulers.begin(), schedulers.end());
  schedulers.erase(std::unique(schedulers.begin(), schedulers.end()), schedulers.end());
  Comparison cmp;
  cmp.scenario = scenario.name;
  cmp.seed = seed;
  for (const std::string& name : schedulers) {
    RunReport r = run_scenario(scenario, name, seed);
    cmp.entries.push_back({name, r.makespan, r.locality_ratio});
  }
  return cmp;
}

inline const Comparison::Entry& comparison_entry(const Comparison& cmp, const std::string& scheduler) {
  for (const Comparison::Entry& e : cmp.entries)
    if (e.scheduler == scheduler) return e;
  fail(Errc::validation_error, "comparison has no entry for '" + scheduler + "'");
}

namespace detail {

inline std::string fixed3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

}  // namespace detail

inline nlohmann::json timeline_json(const Timeline& tl) {
  nlohmann::json j;
  j["makespan"] = tl.makespan;
  j["nodes"] = nlohmann::json::array();
  for (const auto& [node, entries] : tl.nodes) {
    nlohmann::json nj{{"node", node}, {"entries", nlohmann::json::array()}};
    for (const Timeline::Entry& e : entries) {
      nlohmann::json ej{{"task", e.task}, {"compute", {e.compute.start, e.compute.end}}};
      if (e.source) {
        ej["source"] = *e.source;
        ej["transfer"] = {e.transfer.start, e.transfer.end};
      } else {
        ej["source"] = nullptr;
        ej["transfer"] = nullptr;
      }
      nj["entries"].push_back(std::move(ej));
    }
    j["nodes"].push_back(std::move(nj));
  }
  j["links"] = nlohmann::json::array();
  for (const auto& [link, residuals] : tl.link_occupancy)
    j["links"].push_back({{"link", link}, {"residual_per_slot", residuals}});
  return j;
}

inline nlohmann::json report_json(const RunReport& r) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["scenario"] = r.scenario;
  j["scheduler"] = r.scheduler;
  j["seed"] = r.seed;
  j["makespan"] = r.makespan;
  j["locality_ratio"] = r.locality_ratio;
  j["assignments"] = nlohmann::json::array();
  for (const Assignment& a : r.schedule.assignments) {
    nlohmann::json aj{{"task", a.task}, {"node", a.node}, {"compute", {a.compute.start, a.compute.end}}};
    if (a.source) {
      aj["source"] = *a.source;
      aj["transfer"] = {a.transfer.start, a.transfer.end};
      aj["slots"] = {a.reservation->first_slot, a.reservation->last_slot};
      aj["fraction"] = a.reservation->fraction;
    } else {
      aj["source"] = nullptr;
      aj["transfer"] = nullptr;
    }
    j["assignments"].push_back(std::move(aj));
  }
  j["timeline"] = timeline_json(r.timeline);
  return j;
}

/// Frozen column order:
/// scenario,scheduler,seed,task,node,source,local,transfer_start,transfer_end,compute_start,compute_end
inline std::string report_csv(const RunReport& r) {
  std::string out = "scenario,scheduler,seed,task,node,source,local,transfer_start,transfer_end,compute_start,compute_end\n";
  for (const Assignment& a : r.schedule.assignments) {
    out += r.scenario + "," + r.scheduler + "," + std::to_string(r.seed) + ",";
    out += std::to_string(a.task) + "," + std::to_string(a.node) + ",";
    out += (a.source ? std::to_string(*a.source) : std::string{}) + ",";
    out += (a.source ? "0" : "1");
    if (a.source)
      out += "," + detail::fixed3(a.transfer.start) + "," + detail::fixed3(a.transfer.end);
    else
      out += ",,";
    out += "," + detail::fixed3(a.compute.start) + "," + detail::fixed3(a.compute.end) + "\n";
  }
  return out;
}

inline nlohmann::json comparison_json(const Comparison& cmp) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["scenario"] = cmp.scenario;
  j["seed"] = cmp.seed;
  j["results"] = nlohmann::json::array();
  for (const Comparison::Entry& e : cmp.entries)
    j["results"].push_back(
        {{"scheduler", e.scheduler}, {"makespan", e.makespan}, {"locality_ratio", e.locality_ratio}});
  return j;
}

/// Frozen column order: scenario,scheduler,seed,makespan,locality_ratio
inline std::string comparison_csv(const Comparison& cmp) {
  std::string out = "scenario,scheduler,seed,makespan,locality_ratio\n";
  for (const Comparison::Entry& e : cmp.entries)
    out += cmp.scenario + "," + e.scheduler + "," + std::to_string(cmp.seed) + "," + detail::fixed3(e.makespan) +
           "," + detail::fixed3(e.locality_ratio) + "\n";
  return out;
}

inline std::string comparison_table(const Comparison& cmp) {
  std::string out = "scenario " + cmp.scenario + " (seed " + std::to_string(cmp.seed) + ")\n";
  out += "scheduler  makespan   locality\n";
  for (const Comparison::Entry& e : cmp.entries) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%-9s  %9.3f  %9.3f\n", e.scheduler.c_str(), e.makespan, e.locality_ratio);
    out += buf;
  }
  return out;
}

}  // namespace bass
