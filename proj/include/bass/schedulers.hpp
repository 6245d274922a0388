#pragma once

#include <algorithm>
#include <cassert>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <vector>

#include "bass/error.hpp"
#include "bass/slot_ledger.hpp"
#include "bass/topology.hpp"
#include "bass/workload.hpp"

namespace bass {

/// Scenario-wide transfer behavior: either Eq-style arithmetic from split
/// size and residual bandwidth, or a fixed per-block transfer time.
struct TransferModel {
  std::optional<double> fixed_transfer_time;
};

struct Assignment {
  TaskId task = 0;
  NodeId node = 0;
  std::optional<NodeId> source;             // replica the data moves from; none when local
  std::optional<Reservation> reservation;   // present iff source is
  Interval transfer;                        // empty (start == end) when local
  Interval compute;
};

struct Schedule {
  std::vector<Assignment> assignments;  // one per task, in job order
  double makespan = 0.0;
};

/// Bandwidth that would move the split fast enough for the remote node to
/// strictly beat the local completion time; infinity when no transfer budget
/// exists, zero for an empty split.
inline double required_bandwidth(double split_mb, double loc_completion, double minnow_idle, double tp) {
  if (split_mb == 0.0) return 0.0;
  double budget = loc_completion - tp - minnow_idle;
  if (budget <= 0.0) return std::numeric_limits<double>::infinity();
  return split_mb * 8.0 / budget;
}

enum class BassCase {
  local_optimal,        // Case 1.1: the data-local node is already best
  remote_optimal,       // Case 1.2: reserved slots make the min-idle node win
  bandwidth_limited,    // Case 1.3: not enough residual bandwidth, stay local
  locality_starvation,  // Case 2: no available node holds a replica
};

struct BassDecision {
  TaskId task = 0;
  BassCase outcome = BassCase::local_optimal;
  std::optional<NodeId> local_node;
  NodeId minnow_node = 0;
  double local_idle = 0.0;
  double minnow_idle = 0.0;
  std::optional<double> local_completion;   // hypothetical completion on ND_loc
  std::optional<double> minnow_completion;  // completion on ND_minnow under the planned transfer
};
using BassTrace = std::vector<BassDecision>;

namespace detail {

struct RemoteChoice {
  NodeId source = 0;
  Path path;
  TransferPlan plan;
};

/// Best replica to feed `target`: minimum transfer end under current
/// residuals, ties toward the smallest source id.
inline std::optional<RemoteChoice> plan_remote(const Topology& topo, const SlotLedger& ledger, const Task& task,
                                               NodeId target, double not_before, const TransferModel& model) {
  std::optional<RemoteChoice> best;
  for (NodeId src : task.replicas) {
    if (src == target) continue;
    Path path = topo.route(src, target);
    double rate = topo.path_capacity_mbps(path);
    auto plan = ledger.earliest_feasible_window(path, task.split_size_mb, rate, not_before,
                                                std::numeric_limits<double>::infinity(),
                                                model.fixed_transfer_time);
    if (plan && (!best || plan->end < best->plan.end - kTimeTol))
      best = RemoteChoice{src, std::move(path), *plan};
  }
  return best;
}

/// Mutable scheduling state shared by all four policies.
class Builder {
 public:
  Builder(const Job& job, const Topology& topo, SlotLedger& ledger, std::vector<NodeState>& states,
          const TransferModel& model)
      : job_(job), topo_(topo), ledger_(ledger), states_(states), model_(model) {
    std::sort(states_.begin(), states_.end(), [](const NodeState& a, const NodeState& b) { return a.node < b.node; });
    if (states_.empty()) fail(Errc::no_available_node, "no available nodes");
    for (const NodeState& s : states_) initial_idle_[s.node] = s.idle_at;
    schedule_.assignments.resize(job.tasks.size());
  }

  NodeState& state(NodeId node) {
    for (NodeState& s : states_)
      if (s.node == node) return s;
    fail(Errc::no_available_node, "node " + std::to_string(node) + " is not available");
  }

  NodeState& minnow() {
    NodeState* best = &states_.front();
    for (NodeState& s : states_)
      if (s.idle_at < best->idle_at - kTimeTol) best = &s;  // states sorted by id, first min wins ties
    return *best;
  }

  /// Min-idle node among those holding a replica (or any node for an empty
  /// split); null when locality is starved.
  NodeState* local_candidate(const Task& task) {
    NodeState* best = nullptr;
    for (NodeState& s : states_)
      if (task.local_to(s.node) && (!best || s.idle_at < best->idle_at - kTimeTol)) best = &s;
    return best;
  }

  void assign_local(std::size_t task_index, NodeState& n) {
    const Task& task = job_.tasks[task_index];
    Assignment a;
    a.task = task.id;
    a.node = n.node;
    double start = n.idle_at;
    a.transfer = {start, start};
    a.compute = {start, start + task.tp(n.node)};
    commit(task_index, n, std::move(a));
  }

  void assign_remote(std::size_t task_index, NodeState& n, const RemoteChoice& rc) {
    const Task& task = job_.tasks[task_index];
    Assignment a;
    a.task = task.id;
    a.node = n.node;
    a.source = rc.source;
    a.reservation = ledger_.reserve_slots(task.id, rc.path, rc.plan.first_slot, rc.plan.last_slot,
                                          rc.plan.fraction, rc.plan.start, rc.plan.end, task.split_size_mb);
    a.transfer = {rc.plan.start, rc.plan.end};
    double start = std::max(n.idle_at, rc.plan.end);
    a.compute = {start, start + task.tp(n.node)};
    commit(task_index, n, std::move(a));
  }

  Schedule finish() {
    schedule_.makespan = 0.0;
    for (const Assignment& a : schedule_.assignments) schedule_.makespan = std::max(schedule_.makespan, a.compute.end);
    return std::move(schedule_);
  }

  const Job& job() const { return job_; }
  const Topology& topo() const { return topo_; }
  SlotLedger& ledger() { return ledger_; }
  std::vector<NodeState>& states() { return states_; }
  const TransferModel& model() const { return model_; }
  double initial_idle(NodeId node) const { return initial_idle_.at(node); }
  std::map<NodeId, std::vector<std::size_t>>& chains() { return chains_; }

 private:
  void commit(std::size_t task_index, NodeState& n, Assignment a) {
    n.assigned.push_back({a.task, a.transfer, a.compute});
    n.idle_at = a.compute.end;
    chains_[n.node].push_back(task_index);
    schedule_.assignments[task_index] = std::move(a);
  }

  const Job& job_;
  const Topology& topo_;
  SlotLedger& ledger_;
  std::vector<NodeState>& states_;
  const TransferModel& model_;
  std::map<NodeId, double> initial_idle_;
  std::map<NodeId, std::vector<std::size_t>> chains_;  // per-node task indices in execution order
  Schedule schedule_;
};

/// Event-driven locality-first greedy shared by HDS and BAR phase 1: the
/// earliest-idle node repeatedly takes its earliest-indexed data-local task;
/// with no local task left the fallback picks among all unscheduled ones.
template <typename Fallback>
Schedule locality_first(Builder& b, Fallback&& pick_fallback) {
  std::vector<std::size_t> unscheduled(b.job().tasks.size());
  for (std::size_t i = 0; i < unscheduled.size(); ++i) unscheduled[i] = i;
  while (!unscheduled.empty()) {
    NodeState& n = b.minnow();
    auto local = std::find_if(unscheduled.begin(), unscheduled.end(),
                              [&](std::size_t i) { return b.job().tasks[i].local_to(n.node); });
    if (local != unscheduled.end()) {
      b.assign_local(*local, n);
      unscheduled.erase(local);
      continue;
    }
    std::size_t pos = pick_fallback(unscheduled.size());
    std::size_t task_index = unscheduled[pos];
    const Task& task = b.job().tasks[task_index];
    auto rc = plan_remote(b.topo(), b.ledger(), task, n.node, n.idle_at, b.model());
    if (!rc)
      fail(Errc::validation_error, "task " + std::to_string(task.id) + " has no reachable replica source");
    b.assign_remote(task_index, n, *rc);
    unscheduled.erase(unscheduled.begin() + static_cast<std::ptrdiff_t>(pos));
  }
  return b.finish();
}

}  // namespace detail

/// Hadoop-default-style scheduler: locality-first, uniformly random non-local
/// fallback under the given seed.
inline Schedule schedule_hds(const Job& job, const Topology& topo, SlotLedger& ledger,
                             std::vector<NodeState> states, const TransferModel& model, std::uint64_t seed) {
  detail::Builder b(job, topo, ledger, states, model);
  std::mt19937_64 rng(seed);
  return detail::locality_first(b, [&](std::size_t count) { return static_cast<std::size_t>(rng() % count); });
}

/// Per-task local-vs-remote arbitration on completion-time estimates with
/// slot reservations; tasks are taken in job order.
inline Schedule schedule_bass(const Job& job, const Topology& topo, SlotLedger& ledger,
                              std::vector<NodeState> states, const TransferModel& model,
                              BassTrace* trace = nullptr) {
  detail::Builder b(job, topo, ledger, states, model);
  for (std::size_t i = 0; i < job.tasks.size(); ++i) {
    const Task& task = job.tasks[i];
    NodeState& minnow = b.minnow();
    NodeState* loc = b.local_candidate(task);
    BassDecision d;
    d.task = task.id;
    d.minnow_node = minnow.node;
    d.minnow_idle = minnow.idle_at;
    if (loc) {
      d.local_node = loc->node;
      d.local_idle = loc->idle_at;
      if (loc->node == minnow.node || loc->idle_at <= minnow.idle_at + kTimeTol) {
        d.outcome = BassCase::local_optimal;
        d.minnow_completion = loc->idle_at + task.tp(loc->node);
        b.assign_local(i, *loc);
      } else {
        double yc_loc = loc->idle_at + task.tp(loc->node);
        d.local_completion = yc_loc;
        auto rc = detail::plan_remote(topo, ledger, task, minnow.node, minnow.idle_at, model);
        double yc_minnow = std::numeric_limits<double>::infinity();
        if (rc) yc_minnow = std::max(minnow.idle_at, rc->plan.end) + task.tp(minnow.node);
        if (rc && yc_minnow < yc_loc) {
          d.outcome = BassCase::remote_optimal;
          d.minnow_completion = yc_minnow;
          b.assign_remote(i, minnow, *rc);
        } else {
          d.outcome = BassCase::bandwidth_limited;
          d.minnow_completion = yc_loc;  // it runs on ND_loc after all
          b.assign_local(i, *loc);
        }
      }
    } else {
      d.outcome = BassCase::locality_starvation;
      auto rc = detail::plan_remote(topo, ledger, task, minnow.node, minnow.idle_at, model);
      if (!rc)
        fail(Errc::validation_error, "task " + std::to_string(task.id) + " has no reachable replica source");
      d.minnow_completion = std::max(minnow.idle_at, rc->plan.end) + task.tp(minnow.node);
      b.assign_remote(i, minnow, *rc);
    }
    if (trace) trace->push_back(d);
  }
  return b.finish();
}

/// Two-phase scheduler: deterministic locality-first allocation, then the
/// latest-finishing task is relocated while a strictly better node exists.
inline Schedule schedule_bar(const Job& job, const Topology& topo, SlotLedger& ledger,
                             std::vector<NodeState> states, const TransferModel& model) {
  detail::Builder b(job, topo, ledger, states, model);
  Schedule s = detail::locality_first(b, [](std::size_t) { return std::size_t{0}; });

  const std::size_t m = job.tasks.size();
  for (std::size_t iter = 0; iter < m * m; ++iter) {
    // Latest-finishing task; ties toward the earliest job position.
    std::size_t lat = m;
    for (std::size_t i = 0; i < m; ++i)
      if (lat == m || s.assignments[i].compute.end > s.assignments[lat].compute.end + kTimeTol) lat = i;
    if (lat == m) break;  // empty job
    Assignment& a = s.assignments[lat];
    const Task& task = job.tasks[lat];
    double lat_end = a.compute.end;

    // Candidate with the minimum resulting completion, ties toward the
    // smallest node id; evaluated against current idles and residuals.
    NodeId best_node = 0;
    double best_yc = std::numeric_limits<double>::infinity();
    bool found = false;
    for (NodeState& cand : b.states()) {
      if (cand.node == a.node) continue;
      double yc;
      if (task.local_to(cand.node)) {
        yc = cand.idle_at + task.tp(cand.node);
      } else {
        auto rc = detail::plan_remote(topo, ledger, task, cand.node, cand.idle_at, model);
        if (!rc) continue;
        yc = std::max(cand.idle_at, rc->plan.end) + task.tp(cand.node);
      }
      if (yc < lat_end - kTimeTol && (!found || yc < best_yc - kTimeTol)) {
        best_yc = yc;
        best_node = cand.node;
        found = true;
      }
    }
    if (!found) break;

    // The latest task is the last one on its node, except for zero-length
    // compute ties; leave those alone rather than splice mid-chain.
    NodeState& from = b.state(a.node);
    auto& from_chain = b.chains()[a.node];
    if (from_chain.empty() || from_chain.back() != lat) break;
    from_chain.pop_back();
    from.assigned.pop_back();
    from.idle_at = from.assigned.empty() ? b.initial_idle(from.node) : from.assigned.back().compute.end;
    if (a.reservation) ledger.release(*a.reservation);

    NodeState& to = b.state(best_node);
    Assignment moved;
    moved.task = task.id;
    moved.node = to.node;
    if (task.local_to(to.node)) {
      double start = to.idle_at;
      moved.transfer = {start, start};
      moved.compute = {start, start + task.tp(to.node)};
    } else {
      auto rc = detail::plan_remote(topo, ledger, task, to.node, to.idle_at, model);
      assert(rc);  // evaluated feasible a moment ago; releasing only helps
      moved.source = rc->source;
      moved.reservation = ledger.reserve_slots(task.id, rc->path, rc->plan.first_slot, rc->plan.last_slot,
                                               rc->plan.fraction, rc->plan.start, rc->plan.end, task.split_size_mb);
      moved.transfer = {rc->plan.start, rc->plan.end};
      double start = std::max(to.idle_at, rc->plan.end);
      moved.compute = {start, start + task.tp(to.node)};
    }
    to.assigned.push_back({moved.task, moved.transfer, moved.compute});
    to.idle_at = moved.compute.end;
    b.chains()[to.node].push_back(lat);
    s.assignments[lat] = std::move(moved);
  }

  s.makespan = 0.0;
  for (const Assignment& a : s.assignments) s.makespan = std::max(s.makespan, a.compute.end);
  return s;
}

/// BASS plus prefetching: every remote input is re-reserved at the earliest
/// feasible window from time 0, sourced from the least-loaded replica holder,
/// and never later than its original transfer.
inline Schedule schedule_prebass(const Job& job, const Topology& topo, SlotLedger& ledger,
                                 std::vector<NodeState> states, const TransferModel& model) {
  std::map<NodeId, double> initial_idle;
  for (const NodeState& s : states) initial_idle[s.node] = s.idle_at;

  Schedule s = schedule_bass(job, topo, ledger, std::move(states), model);

  // Per-node execution order: BASS appends per node in job order.
  std::map<NodeId, std::vector<std::size_t>> chains;
  for (std::size_t i = 0; i < s.assignments.size(); ++i) chains[s.assignments[i].node].push_back(i);

  // Chain-end load per node after BASS, for least-loaded source selection.
  std::map<NodeId, double> load;
  for (const auto& [node, idle] : initial_idle) load[node] = idle;
  for (const Assignment& a : s.assignments) load[a.node] = std::max(load[a.node], a.compute.end);

  for (std::size_t i = 0; i < s.assignments.size(); ++i) {
    Assignment& a = s.assignments[i];
    if (!a.source) continue;
    const Task& task = job.tasks[i];
    Reservation old = *a.reservation;
    ledger.release(old);

    NodeId src = 0;
    double src_load = std::numeric_limits<double>::infinity();
    for (NodeId r : task.replicas) {
      if (r == a.node) continue;
      auto it = load.find(r);
      double l = it == load.end() ? 0.0 : it->second;  // storage-only holders carry no compute load
      if (l < src_load - kTimeTol) {
        src = r;
        src_load = l;
      }
    }

    Path path = topo.route(src, a.node);
    double rate = topo.path_capacity_mbps(path);
    auto plan = ledger.earliest_feasible_window(path, task.split_size_mb, rate, 0.0, old.end,
                                                model.fixed_transfer_time);
    if (plan) {
      a.source = src;
      a.reservation = ledger.reserve_slots(task.id, path, plan->first_slot, plan->last_slot, plan->fraction,
                                           plan->start, plan->end, task.split_size_mb);
      a.transfer = {plan->start, plan->end};
    } else {
      // Releasing its own fraction always leaves the original window
      // feasible, so this only restores the BASS reservation verbatim.
      a.reservation = ledger.reserve_slots(old.task, old.path, old.first_slot, old.last_slot, old.fraction,
                                           old.start, old.end, old.size_mb);
    }
  }

  // Earlier transfers can only pull computes earlier; rebuild every chain.
  s.makespan = 0.0;
  for (auto& [node, chain] : chains) {
    double idle = initial_idle.at(node);
    for (std::size_t idx : chain) {
      Assignment& a = s.assignments[idx];
      const Task& task = job.tasks[idx];
      double start = a.source ? std::max(idle, a.transfer.end) : idle;
      if (!a.source) a.transfer = {start, start};
      a.compute = {start, start + task.tp(node)};
      idle = a.compute.end;
      s.makespan = std::max(s.makespan, a.compute.end);
    }
  }
  return s;
}

}  // namespace bass
