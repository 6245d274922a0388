#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <set>
#include <vector>

#include "bass/bass.hpp"

using namespace bass;
using Catch::Approx;

namespace {

struct Fixture {
  Scenario scenario;
  Topology topo;
  Job job;
  std::vector<NodeState> states;
  TransferModel model;

  explicit Fixture(Scenario s)
      : scenario(std::move(s)),
        topo(build_topology(scenario.topology)),
        job(scenario.job()),
        states(scenario.node_states()),
        model(scenario.transfer_model()) {}

  SlotLedger ledger() const { return SlotLedger(scenario.slot_duration); }
};

const Assignment& assignment_of(const Schedule& s, TaskId task) {
  for (const Assignment& a : s.assignments)
    if (a.task == task) return a;
  FAIL("task not in schedule");
  throw std::logic_error("unreachable");
}

std::map<NodeId, std::vector<TaskId>> tasks_per_node(const Schedule& s) {
  std::map<NodeId, std::vector<TaskId>> out;
  std::map<NodeId, std::vector<const Assignment*>> by_node;
  for (const Assignment& a : s.assignments) by_node[a.node].push_back(&a);
  for (auto& [node, list] : by_node) {
    std::stable_sort(list.begin(), list.end(),
                     [](const Assignment* x, const Assignment* y) { return x->compute.start < y->compute.start; });
    for (const Assignment* a : list) out[node].push_back(a->task);
  }
  return out;
}

void check_schedule_valid(const Fixture& f, const Schedule& s) {
  Timeline tl = execute(s, f.job, f.topo, f.states, f.scenario.slot_duration);
  CHECK(makespan(tl) == Approx(s.makespan).margin(1e-9));
}

}  // namespace

TEST_CASE("HDS on the golden scenario finishes at 39 s with the known layout", "[schedulers]") {
  for (std::uint64_t seed : {0ULL, 7ULL, 12345ULL}) {
    Fixture f(example1());
    SlotLedger ledger = f.ledger();
    Schedule s = schedule_hds(f.job, f.topo, ledger, f.states, f.model, seed);
    CHECK(s.makespan == Approx(39.0).margin(1e-9));
    auto layout = tasks_per_node(s);
    CHECK(layout[1] == std::vector<TaskId>{2, 3, 7});
    CHECK(layout[2] == std::vector<TaskId>{1, 6});
    CHECK(layout[3] == std::vector<TaskId>{4});
    CHECK(layout[4] == std::vector<TaskId>{5, 8, 9});
    check_schedule_valid(f, s);
  }
}

TEST_CASE("HDS on a single available node serializes everything", "[schedulers]") {
  Scenario sc;
  sc.name = "single";
  sc.topology.compute_nodes = {1, 2};
  sc.topology.links = {{1, 1, 2, 100.0}};
  sc.homogeneous_compute_time = 9.0;
  for (TaskId t = 1; t <= 3; ++t) sc.tasks.push_back({t, 64.0, {2}, std::nullopt});
  sc.initial_idle = {{1, 2.0}};
  sc.available_nodes = {1};
  validate_scenario(sc);

  Fixture f(sc);
  SlotLedger ledger = f.ledger();
  Schedule s = schedule_hds(f.job, f.topo, ledger, f.states, f.model, 99);
  // idle + sum of (transfer + compute): 2 + 3 * (5.12 + 9)
  CHECK(s.makespan == Approx(2.0 + 3.0 * (5.12 + 9.0)).margin(1e-9));
  check_schedule_valid(f, s);
}

TEST_CASE("HDS with universal replicas equals greedy list scheduling", "[schedulers]") {
  Scenario sc;
  sc.name = "all-local";
  sc.topology.compute_nodes = {1, 2, 3};
  sc.topology.switches = {4};
  sc.topology.links = {{1, 1, 4, 100.0}, {2, 2, 4, 100.0}, {3, 3, 4, 100.0}};
  sc.homogeneous_compute_time = 4.0;
  for (TaskId t = 1; t <= 7; ++t) sc.tasks.push_back({t, 64.0, {1, 2, 3}, std::nullopt});
  sc.initial_idle = {{1, 1.0}, {2, 2.0}, {3, 3.0}};
  validate_scenario(sc);

  Fixture f(sc);
  SlotLedger ledger = f.ledger();
  Schedule s = schedule_hds(f.job, f.topo, ledger, f.states, f.model, 1);

  // Hand-rolled event replay: the earliest-idle node takes the next task.
  std::map<NodeId, double> idle{{1, 1.0}, {2, 2.0}, {3, 3.0}};
  std::map<TaskId, double> expected_end;
  for (TaskId t = 1; t <= 7; ++t) {
    NodeId pick = 0;
    for (const auto& [node, at] : idle)
      if (pick == 0 || at < idle[pick] - 1e-12) pick = node;
    idle[pick] += 4.0;
    expected_end[t] = idle[pick];
  }
  for (const Assignment& a : s.assignments) {
    CHECK_FALSE(a.source.has_value());
    CHECK(a.compute.end == Approx(expected_end[a.task]).margin(1e-9));
  }
  check_schedule_valid(f, s);
}

TEST_CASE("BAR on the golden scenario relocates TK9 and finishes at 38 s", "[schedulers]") {
  Fixture f(example1());
  SlotLedger ledger = f.ledger();
  Schedule s = schedule_bar(f.job, f.topo, ledger, f.states, f.model);
  CHECK(s.makespan == Approx(38.0).margin(1e-9));
  const Assignment& tk9 = assignment_of(s, 9);
  CHECK(tk9.node == 3);
  CHECK_FALSE(tk9.source.has_value());
  CHECK(tk9.compute.end == Approx(38.0).margin(1e-9));  // idle 29 + 9
  check_schedule_valid(f, s);
}

TEST_CASE("BAR makes no move when the latest task is already placed best", "[schedulers]") {
  Scenario sc;
  sc.name = "fixpoint";
  sc.topology.compute_nodes = {1, 2};
  sc.topology.links = {{1, 1, 2, 100.0}};
  sc.homogeneous_compute_time = 9.0;
  sc.tasks.push_back({1, 64.0, {1}, std::nullopt});
  sc.initial_idle = {{1, 0.0}, {2, 30.0}};
  validate_scenario(sc);

  Fixture f(sc);
  SlotLedger ledger = f.ledger();
  Schedule s = schedule_bar(f.job, f.topo, ledger, f.states, f.model);
  CHECK(s.makespan == Approx(9.0).margin(1e-9));
  CHECK(assignment_of(s, 1).node == 1);
}

TEST_CASE("BAR offloads the latest of three stacked tasks when a transfer pays", "[schedulers]") {
  Scenario sc;
  sc.name = "offload";
  sc.topology.compute_nodes = {1, 2};
  sc.topology.links = {{1, 1, 2, 100.0}};
  sc.fixed_transfer_time = 5.0;
  sc.homogeneous_compute_time = 9.0;
  for (TaskId t = 1; t <= 3; ++t) sc.tasks.push_back({t, 64.0, {1}, std::nullopt});
  sc.initial_idle = {{1, 0.0}, {2, 0.0}};
  validate_scenario(sc);

  Fixture f(sc);

  // Enumerated oracle over both placements of the latest task: keeping all
  // three on node 1 ends at 27; moving one to node 2 ends at max(18, 14).
  {
    SlotLedger ledger = f.ledger();
    Schedule opt = brute_force_optimal(f.job, f.topo, f.states, f.model, 1.0);
    CHECK(opt.makespan == Approx(18.0).margin(1e-9));
  }

  SlotLedger ledger = f.ledger();
  Schedule s = schedule_bar(f.job, f.topo, ledger, f.states, f.model);
  CHECK(s.makespan == Approx(18.0).margin(1e-9));
  // Exactly one task pays the 5 s transfer to node 2 and finishes at 14 s
  // there; stacking all three on node 1 would have ended at 27 s.
  int on_node2 = 0;
  for (const Assignment& a : s.assignments) {
    if (a.node != 2) continue;
    ++on_node2;
    REQUIRE(a.source.has_value());
    CHECK(*a.source == 1);
    CHECK(a.compute.end == Approx(14.0).margin(1e-9));
  }
  CHECK(on_node2 == 1);
  check_schedule_valid(f, s);
}

TEST_CASE("BASS on the golden scenario finishes at 35 s via the remote TK1", "[schedulers]") {
  Fixture f(example1());
  SlotLedger ledger = f.ledger();
  BassTrace trace;
  Schedule s = schedule_bass(f.job, f.topo, ledger, f.states, f.model, &trace);
  CHECK(s.makespan == Approx(35.0).margin(1e-9));

  const Assignment& tk1 = assignment_of(s, 1);
  CHECK(tk1.node == 1);
  REQUIRE(tk1.source.has_value());
  CHECK(*tk1.source == 2);
  CHECK(tk1.transfer.start == Approx(3.0).margin(1e-9));
  CHECK(tk1.transfer.end == Approx(8.0).margin(1e-9));
  CHECK(tk1.compute.start == Approx(8.0).margin(1e-9));
  CHECK(tk1.compute.end == Approx(17.0).margin(1e-9));
  REQUIRE(tk1.reservation.has_value());
  CHECK(tk1.reservation->first_slot == 4);
  CHECK(tk1.reservation->last_slot == 8);
  CHECK(tk1.reservation->path == Path{2, 1});

  // First decision: completion 17 on the min-idle node vs 18 on the local one.
  REQUIRE_FALSE(trace.empty());
  const BassDecision& d = trace.front();
  CHECK(d.task == 1);
  CHECK(d.outcome == BassCase::remote_optimal);
  REQUIRE(d.local_node.has_value());
  CHECK(*d.local_node == 2);
  CHECK(d.minnow_node == 1);
  CHECK(d.local_completion.value() == Approx(18.0).margin(1e-9));
  CHECK(d.minnow_completion.value() == Approx(17.0).margin(1e-9));

  // The last finisher is TK9 on node 1 at 35 s; the runner-up ends at 34 s.
  const Assignment& tk9 = assignment_of(s, 9);
  CHECK(tk9.node == 1);
  CHECK(tk9.compute.end == Approx(35.0).margin(1e-9));
  const Assignment& tk8 = assignment_of(s, 8);
  CHECK(tk8.compute.end == Approx(34.0).margin(1e-9));
  check_schedule_valid(f, s);
}

TEST_CASE("required bandwidth inverts the transfer-budget arithmetic", "[schedulers]") {
  // Golden first decision: budget = 18 - 9 - 3 = 6 s for 64 MB.
  double need = required_bandwidth(64.0, 18.0, 3.0, 9.0);
  CHECK(need == Approx(512.0 / 6.0).margin(1e-9));
  CHECK(need > 85.3);
  CHECK(need < 100.0);  // a full 100 Mbps link qualifies

  CHECK(required_bandwidth(64.0, 12.0, 3.0, 9.0) == std::numeric_limits<double>::infinity());
  CHECK(required_bandwidth(0.0, 18.0, 3.0, 9.0) == 0.0);
}

TEST_CASE("BASS stays local when every replica sits on the min-idle node", "[schedulers]") {
  Scenario sc;
  sc.name = "pure-local";
  sc.topology.compute_nodes = {1, 2};
  sc.topology.links = {{1, 1, 2, 100.0}};
  sc.homogeneous_compute_time = 5.0;
  for (TaskId t = 1; t <= 4; ++t) sc.tasks.push_back({t, 64.0, {1}, std::nullopt});
  // Node 2 stays busy beyond the whole local chain, so node 1 is the min-idle
  // node at every decision.
  sc.initial_idle = {{1, 0.0}, {2, 30.0}};
  validate_scenario(sc);

  Fixture f(sc);
  SlotLedger ledger = f.ledger();
  BassTrace trace;
  Schedule s = schedule_bass(f.job, f.topo, ledger, f.states, f.model, &trace);
  for (const Assignment& a : s.assignments) {
    CHECK(a.node == 1);
    CHECK_FALSE(a.source.has_value());
  }
  for (const BassDecision& d : trace) CHECK(d.outcome == BassCase::local_optimal);
  CHECK(ledger.active_reservations() == 0);
}

TEST_CASE("with zero split sizes all schedulers reduce to list scheduling", "[schedulers]") {
  Scenario sc;
  sc.name = "zero-splits";
  sc.topology.compute_nodes = {1, 2, 3};
  sc.topology.switches = {4};
  sc.topology.links = {{1, 1, 4, 100.0}, {2, 2, 4, 100.0}, {3, 3, 4, 100.0}};
  sc.homogeneous_compute_time = 7.0;
  for (TaskId t = 1; t <= 8; ++t) sc.tasks.push_back({t, 0.0, {}, std::nullopt});
  sc.initial_idle = {{1, 0.0}, {2, 3.0}, {3, 5.0}};
  validate_scenario(sc);

  Fixture f(sc);
  SlotLedger l1 = f.ledger(), l2 = f.ledger(), l3 = f.ledger(), l4 = f.ledger();
  double hds = schedule_hds(f.job, f.topo, l1, f.states, f.model, 5).makespan;
  double bar = schedule_bar(f.job, f.topo, l2, f.states, f.model).makespan;
  double bass_mk = schedule_bass(f.job, f.topo, l3, f.states, f.model).makespan;
  double pre = schedule_prebass(f.job, f.topo, l4, f.states, f.model).makespan;
  CHECK(hds == Approx(bar).margin(1e-9));
  CHECK(bar == Approx(bass_mk).margin(1e-9));
  CHECK(bass_mk == Approx(pre).margin(1e-9));
}

TEST_CASE("BASS handles locality starvation with a reservation", "[schedulers]") {
  Scenario sc;
  sc.name = "starved";
  sc.topology.compute_nodes = {1, 2, 3};
  sc.topology.switches = {4};
  sc.topology.links = {{1, 1, 4, 100.0}, {2, 2, 4, 100.0}, {3, 3, 4, 100.0}};
  sc.homogeneous_compute_time = 9.0;
  sc.tasks.push_back({1, 64.0, {3}, std::nullopt});  // replica only on the unavailable node
  sc.initial_idle = {{1, 1.0}, {2, 0.0}};
  sc.available_nodes = {1, 2};
  validate_scenario(sc);

  Fixture f(sc);
  SlotLedger ledger = f.ledger();
  BassTrace trace;
  Schedule s = schedule_bass(f.job, f.topo, ledger, f.states, f.model, &trace);
  REQUIRE(trace.size() == 1);
  CHECK(trace.front().outcome == BassCase::locality_starvation);
  const Assignment& a = s.assignments.front();
  CHECK(a.node == 2);  // min idle among the authorized subset
  REQUIRE(a.source.has_value());
  CHECK(*a.source == 3);
  CHECK(a.transfer.end == Approx(5.12).margin(1e-9));
  CHECK(s.makespan == Approx(5.12 + 9.0).margin(1e-9));
  check_schedule_valid(f, s);
}

TEST_CASE("BASS case 1.2 completions strictly beat the local alternative", "[schedulers]") {
  GeneratorParams params;
  params.scenario_count = 30;
  params.node_count = 5;
  params.task_count = 12;
  params.replica_count = 2;
  params.split_size_mb = {16.0, 128.0};
  params.compute_time_s = {4.0, 14.0};
  params.initial_idle_s = {0.0, 30.0};
  params.seed = 2024;
  for (const Scenario& sc : generate_scenarios(params)) {
    Fixture f(sc);
    SlotLedger ledger = f.ledger();
    BassTrace trace;
    Schedule s = schedule_bass(f.job, f.topo, ledger, f.states, f.model, &trace);
    for (std::size_t i = 0; i < trace.size(); ++i) {
      if (trace[i].outcome != BassCase::remote_optimal) continue;
      REQUIRE(trace[i].local_completion.has_value());
      CHECK(trace[i].minnow_completion.value() < trace[i].local_completion.value());
      CHECK(s.assignments[i].compute.end == Approx(trace[i].minnow_completion.value()).margin(1e-9));
    }
    check_schedule_valid(f, s);
  }
}

TEST_CASE("Pre-BASS on the golden scenario prefetches to 34 s", "[schedulers]") {
  Fixture f(example1());
  SlotLedger ledger = f.ledger();
  Schedule s = schedule_prebass(f.job, f.topo, ledger, f.states, f.model);
  CHECK(s.makespan == Approx(34.0).margin(1e-9));

  const Assignment& tk1 = assignment_of(s, 1);
  CHECK(tk1.node == 1);
  REQUIRE(tk1.source.has_value());
  CHECK(*tk1.source == 2);  // the least-loaded replica holder
  CHECK(tk1.transfer.start == Approx(0.0).margin(1e-9));
  CHECK(tk1.transfer.end == Approx(5.0).margin(1e-9));
  REQUIRE(tk1.reservation.has_value());
  CHECK(tk1.reservation->first_slot == 1);
  CHECK(tk1.reservation->last_slot == 5);
  CHECK(tk1.compute.start == Approx(5.0).margin(1e-9));

  // The node-1 chain now ends at 32 s and TK8 elsewhere finishes last at 34 s.
  auto layout = tasks_per_node(s);
  double nd1_end = 0.0;
  for (const Assignment& a : s.assignments)
    if (a.node == 1) nd1_end = std::max(nd1_end, a.compute.end);
  CHECK(nd1_end == Approx(32.0).margin(1e-9));
  const Assignment& tk8 = assignment_of(s, 8);
  CHECK(tk8.compute.end == Approx(34.0).margin(1e-9));
  check_schedule_valid(f, s);
}

TEST_CASE("Pre-BASS equals BASS when nothing runs remotely", "[schedulers]") {
  Scenario sc;
  sc.name = "no-remote";
  sc.topology.compute_nodes = {1, 2};
  sc.topology.links = {{1, 1, 2, 100.0}};
  sc.homogeneous_compute_time = 5.0;
  for (TaskId t = 1; t <= 4; ++t) sc.tasks.push_back({t, 64.0, {1, 2}, std::nullopt});
  sc.initial_idle = {{1, 0.0}, {2, 1.0}};
  validate_scenario(sc);

  Fixture f(sc);
  SlotLedger l1 = f.ledger(), l2 = f.ledger();
  Schedule b = schedule_bass(f.job, f.topo, l1, f.states, f.model);
  Schedule p = schedule_prebass(f.job, f.topo, l2, f.states, f.model);
  REQUIRE(b.assignments.size() == p.assignments.size());
  CHECK(b.makespan == Approx(p.makespan).margin(1e-9));
  for (std::size_t i = 0; i < b.assignments.size(); ++i) {
    CHECK(b.assignments[i].node == p.assignments[i].node);
    CHECK(b.assignments[i].compute.end == Approx(p.assignments[i].compute.end).margin(1e-9));
  }
}

TEST_CASE("a lone remote task starts computing no later than under BASS", "[schedulers]") {
  Scenario sc;
  sc.name = "one-remote";
  sc.topology.compute_nodes = {1, 2};
  sc.topology.links = {{1, 1, 2, 100.0}};
  sc.homogeneous_compute_time = 9.0;
  sc.tasks.push_back({1, 64.0, {2}, std::nullopt});
  sc.initial_idle = {{1, 3.0}, {2, 40.0}};
  validate_scenario(sc);

  Fixture f(sc);
  SlotLedger l1 = f.ledger(), l2 = f.ledger();
  Schedule b = schedule_bass(f.job, f.topo, l1, f.states, f.model);
  Schedule p = schedule_prebass(f.job, f.topo, l2, f.states, f.model);
  REQUIRE(b.assignments.front().source.has_value());
  REQUIRE(p.assignments.front().source.has_value());
  // BASS waits for the idle time before transferring; the prefetch starts at 0.
  CHECK(b.assignments.front().compute.start == Approx(3.0 + 5.12).margin(1e-9));
  CHECK(p.assignments.front().compute.start == Approx(5.12).margin(1e-9));
  CHECK(p.assignments.front().compute.start <= b.assignments.front().compute.start + 1e-9);
  CHECK(p.makespan <= b.makespan + 1e-9);
}

TEST_CASE("schedulers are deterministic for a fixed seed", "[schedulers]") {
  GeneratorParams params;
  params.scenario_count = 3;
  params.node_count = 4;
  params.task_count = 10;
  params.replica_count = 2;
  params.split_size_mb = {32.0, 96.0};
  params.compute_time_s = {5.0, 12.0};
  params.initial_idle_s = {0.0, 25.0};
  params.seed = 11;
  for (const Scenario& sc : generate_scenarios(params)) {
    Fixture f(sc);
    for (const std::string& name : scheduler_names()) {
      RunReport a = run_scenario(sc, name, 77);
      RunReport b = run_scenario(sc, name, 77);
      CHECK(report_json(a).dump() == report_json(b).dump());
    }
  }
}

TEST_CASE("with replicas everywhere BASS and HDS agree on the makespan", "[schedulers]") {
  GeneratorParams params;
  params.scenario_count = 5;
  params.node_count = 4;
  params.task_count = 12;
  params.replica_count = 4;  // a replica on every node
  params.split_size_mb = {32.0, 96.0};
  params.compute_time_s = {5.0, 12.0};
  params.initial_idle_s = {0.0, 25.0};
  params.seed = 5;
  for (const Scenario& sc : generate_scenarios(params)) {
    Fixture f(sc);
    SlotLedger l1 = f.ledger(), l2 = f.ledger();
    double hds = schedule_hds(f.job, f.topo, l1, f.states, f.model, 13).makespan;
    double bass_mk = schedule_bass(f.job, f.topo, l2, f.states, f.model).makespan;
    CHECK(hds == Approx(bass_mk).margin(1e-9));
  }
}

TEST_CASE("the exhaustive oracle never beats a heuristic from below", "[schedulers]") {
  GeneratorParams params;
  params.scenario_count = 25;
  params.node_count = 3;
  params.task_count = 6;
  params.replica_count = 2;
  params.split_size_mb = {16.0, 96.0};
  params.compute_time_s = {3.0, 12.0};
  params.initial_idle_s = {0.0, 15.0};
  params.seed = 321;
  for (const Scenario& sc : generate_scenarios(params)) {
    Fixture f(sc);
    Schedule opt = brute_force_optimal(f.job, f.topo, f.states, f.model, sc.slot_duration);
    for (const std::string& name : scheduler_names()) {
      RunReport r = run_scenario(sc, name, 55);
      CHECK(opt.makespan <= r.makespan + 1e-9);
    }
  }
}
