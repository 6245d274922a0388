#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "bass/error.hpp"
#include "bass/schedulers.hpp"
#include "bass/slot_ledger.hpp"
#include "bass/topology.hpp"
#include "bass/workload.hpp"

namespace bass {

/// Replayed, re-validated form of a Schedule: per-node execution records plus
/// the link occupancy the reservations imply.
struct Timeline {
  struct Entry {
    TaskId task = 0;
    std::optional<NodeId> source;
    Interval transfer;
    Interval compute;
  };
  std::map<NodeId, std::vector<Entry>> nodes;
  std::map<LinkId, std::vector<double>> link_occupancy;  // residual per slot, index 0 = TS1
  double makespan = 0.0;
};

/// Max compute end over all tasks, 0 for an empty timeline.
inline double makespan(const Timeline& tl) {
  double m = 0.0;
  for (const auto& [node, entries] : tl.nodes)
    for (const Timeline::Entry& e : entries) m = std::max(m, e.compute.end);
  return m;
}

/// Re-reserves every transfer on a fresh ledger and recomputes all intervals
/// from scratch; any deviation from the schedule's claims is an error.
inline Timeline execute(const Schedule& schedule, const Job& job, const Topology& topo,
                        std::span<const NodeState> initial, double slot_duration) {
  SlotLedger ledger(slot_duration);

  std::map<TaskId, const Task*> tasks;
  for (const Task& t : job.tasks) tasks[t.id] = &t;
  if (schedule.assignments.size() != job.tasks.size())
    fail(Errc::inconsistent_schedule, "schedule does not cover the job's tasks");

  std::map<NodeId, double> idle;
  for (const NodeState& s : initial) idle[s.node] = s.idle_at;

  // Replay reservations; exact fractions from a conserving ledger re-grant in
  // any order, so failure here means the schedule overcommits a link slot.
  std::map<TaskId, bool> seen;
  for (const Assignment& a : schedule.assignments) {
    if (!tasks.count(a.task)) fail(Errc::inconsistent_schedule, "unknown task " + std::to_string(a.task));
    if (seen[a.task]) fail(Errc::inconsistent_schedule, "task " + std::to_string(a.task) + " assigned twice");
    seen[a.task] = true;
    if (!idle.count(a.node))
      fail(Errc::inconsistent_schedule,
           "task " + std::to_string(a.task) + " assigned to unavailable node " + std::to_string(a.node));
    if (a.source.has_value() != a.reservation.has_value())
      fail(Errc::inconsistent_schedule, "task " + std::to_string(a.task) + " has a source without a reservation");
    if (a.reservation) {
      const Reservation& r = *a.reservation;
      if (std::abs(r.start - a.transfer.start) > kTimeTol || std::abs(r.end - a.transfer.end) > kTimeTol)
        fail(Errc::inconsistent_schedule,
             "task " + std::to_string(a.task) + " transfer interval disagrees with its reservation");
      try {
        ledger.reserve_slots(r.task, r.path, r.first_slot, r.last_slot, r.fraction, r.start, r.end, r.size_mb);
      } catch (const Error& e) {
        fail(Errc::infeasible_schedule, std::string("reservation replay failed: ") + e.what());
      }
    }
  }

  // Per-node chains in claimed execution order.
  std::map<NodeId, std::vector<const Assignment*>> by_node;
  for (const Assignment& a : schedule.assignments) by_node[a.node].push_back(&a);
  for (auto& [node, chain] : by_node)
    std::stable_sort(chain.begin(), chain.end(),
                     [](const Assignment* x, const Assignment* y) { return x->compute.start < y->compute.start; });

  Timeline tl;
  double max_end = 0.0;
  for (auto& [node, chain] : by_node) {
    double t = idle.at(node);
    for (const Assignment* a : chain) {
      double start = a->source ? std::max(t, a->transfer.end) : t;
      double end = start + tasks.at(a->task)->tp(node);
      if (std::abs(start - a->compute.start) > kTimeTol || std::abs(end - a->compute.end) > kTimeTol) {
        std::ostringstream msg;
        msg << "task " << a->task << " on node " << node << " recomputes to [" << start << ", " << end
            << "], schedule claims [" << a->compute.start << ", " << a->compute.end << "]";
        fail(Errc::inconsistent_schedule, msg.str());
      }
      t = end;
      max_end = std::max(max_end, end);
      tl.nodes[node].push_back({a->task, a->source, a->transfer, a->compute});
    }
  }
  if (std::abs(schedule.makespan - max_end) > kTimeTol)
    fail(Errc::inconsistent_schedule, "claimed makespan differs from the replayed one");

  std::vector<LinkId> links;
  for (const Link& l : topo.links()) links.push_back(l.id);
  tl.link_occupancy = ledger.snapshot(links);
  tl.makespan = max_end;
  return tl;
}

/// Exhaustive makespan oracle over all task-to-node maps; tasks run per node
/// in job order. Transfers use the strongest model any scheduler has: the
/// prefetch window from time 0 that ends no later than the plain
/// start-at-idle window would. Tractable only at desk scale, guarded by an
/// enumeration budget.
inline Schedule brute_force_optimal(const Job& job, const Topology& topo, std::vector<NodeState> states,
                                    const TransferModel& model, double slot_duration,
                                    std::uint64_t budget = 100000) {
  std::sort(states.begin(), states.end(), [](const NodeState& a, const NodeState& b) { return a.node < b.node; });
  if (states.empty()) fail(Errc::no_available_node, "no available nodes");
  const std::size_t m = job.tasks.size();
  const std::size_t n = states.size();

  std::uint64_t total = 1;
  for (std::size_t i = 0; i < m; ++i) {
    if (total > budget / n + 1) total = budget + 1;  // saturate without overflow
    total *= n;
    if (total > budget)
      fail(Errc::budget_exceeded, "oracle would enumerate more than " + std::to_string(budget) + " assignments");
  }

  auto replay = [&](const std::vector<std::size_t>& pick, Schedule* out) {
    SlotLedger ledger(slot_duration);
    std::vector<double> idle(n);
    for (std::size_t j = 0; j < n; ++j) idle[j] = states[j].idle_at;
    double mk = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const Task& task = job.tasks[i];
      std::size_t j = pick[i];
      NodeId node = states[j].node;
      Assignment a;
      a.task = task.id;
      a.node = node;
      double start;
      if (task.local_to(node)) {
        start = idle[j];
        a.transfer = {start, start};
      } else {
        std::optional<detail::RemoteChoice> best;
        for (NodeId src : task.replicas) {
          if (src == node) continue;
          Path path = topo.route(src, node);
          double rate = topo.path_capacity_mbps(path);
          auto at_idle = ledger.earliest_feasible_window(path, task.split_size_mb, rate, idle[j],
                                                         std::numeric_limits<double>::infinity(),
                                                         model.fixed_transfer_time);
          if (!at_idle) continue;
          // The start-at-idle window always qualifies as its own prefetch.
          auto plan = ledger.earliest_feasible_window(path, task.split_size_mb, rate, 0.0, at_idle->end,
                                                      model.fixed_transfer_time);
          if (!plan) plan = at_idle;
          if (!best || plan->end < best->plan.end - kTimeTol)
            best = detail::RemoteChoice{src, std::move(path), *plan};
        }
        if (!best)
          fail(Errc::validation_error, "task " + std::to_string(task.id) + " has no reachable replica source");
        a.source = best->source;
        a.reservation = ledger.reserve_slots(task.id, best->path, best->plan.first_slot, best->plan.last_slot,
                                             best->plan.fraction, best->plan.start, best->plan.end,
                                             task.split_size_mb);
        a.transfer = {best->plan.start, best->plan.end};
        start = std::max(idle[j], best->plan.end);
      }
      a.compute = {start, start + task.tp(node)};
      idle[j] = a.compute.end;
      mk = std::max(mk, a.compute.end);
      if (out) out->assignments.push_back(std::move(a));
    }
    if (out) out->makespan = mk;
    return mk;
  };

  std::vector<std::size_t> pick(m, 0), best_pick(m, 0);
  double best = std::numeric_limits<double>::infinity();
  for (;;) {
    double mk = replay(pick, nullptr);
    if (mk < best - kTimeTol) {  // first minimum wins: lexicographically smallest map
      best = mk;
      best_pick = pick;
    }
    bool done = (m == 0);
    if (!done) {
      std::size_t d = m - 1;
      for (;;) {
        if (++pick[d] < n) break;
        pick[d] = 0;
        if (d == 0) {
          done = true;
          break;
        }
        --d;
      }
    }
    if (done) break;
  }

  Schedule out;
  replay(best_pick, &out);
  return out;
}

enum class TrafficClass { shuffle, background, other };

inline std::string to_string(TrafficClass c) {
  switch (c) {
    case TrafficClass::shuffle: return "shuffle";
    case TrafficClass::background: return "background";
    case TrafficClass::other: return "other";
  }
  return "other";
}

/// Static per-class rate caps from the switch queue setup. Queue rates cap,
/// they do not partition: their sum may exceed max_rate, each single rate
/// may not.
struct QueueConfig {
  double max_rate_mbps = 0.0;
  struct Queue {
    std::string name;
    double rate_mbps = 0.0;
  };
  std::vector<Queue> queues;
  std::map<TrafficClass, std::string> class_map;
};

/// Rate of the queue a traffic class is directed to; feeds movement_time as
/// the link rate for transfers of that class.
inline double effective_rate(const QueueConfig& config, TrafficClass cls) {
  auto it = config.class_map.find(cls);
  if (it == config.class_map.end()) fail(Errc::unmapped_class, "traffic class " + to_string(cls) + " is not mapped");
  for (const QueueConfig::Queue& q : config.queues)
    if (q.name == it->second) return q.rate_mbps;
  fail(Errc::unmapped_class, "queue " + it->second + " does not exist");
}

/// Plain-text Gantt: one row per node, one column per slot, task ids in
/// compute cells, '▸' in transfer cells, '·' when idle.
inline std::string render_gantt(const Timeline& tl, double slot_duration) {
  SlotLedger clock(slot_duration);
  int columns = 0;
  for (const auto& [node, entries] : tl.nodes)
    for (const Timeline::Entry& e : entries) {
      columns = std::max(columns, clock.slot_of_end(e.compute.end));
      if (e.source) columns = std::max(columns, clock.slot_of_end(e.transfer.end));
    }
  int width = 1;
  for (const auto& [node, entries] : tl.nodes)
    for (const Timeline::Entry& e : entries)
      width = std::max(width, static_cast<int>(std::to_string(e.task).size()));

  auto pad = [&](const std::string& cell) {
    std::string s = cell;
    while (static_cast<int>(s.size()) < width) s += cell == "·" || cell == "▸" ? cell : " ";
    return s;
  };

  std::ostringstream out;
  out << "slots 1.." << columns << " @ " << slot_duration << "s each; digits = computing task, ▸ = inbound transfer\n";
  for (const auto& [node, entries] : tl.nodes) {
    std::vector<std::string> cells(static_cast<std::size_t>(columns), "·");
    for (const Timeline::Entry& e : entries) {
      if (e.source)
        for (int s = clock.slot_of_start(e.transfer.start); s <= clock.slot_of_end(e.transfer.end); ++s)
          if (s >= 1 && s <= columns && cells[static_cast<std::size_t>(s - 1)] == "·")
            cells[static_cast<std::size_t>(s - 1)] = "▸";
      for (int s = clock.slot_of_start(e.compute.start); s <= clock.slot_of_end(e.compute.end); ++s)
        if (s >= 1 && s <= columns) cells[static_cast<std::size_t>(s - 1)] = std::to_string(e.task);
    }
    out << "ND" << node << " |";
    for (const std::string& c : cells) out << pad(c);
    out << "|\n";
  }
  return out.str();
}

}  // namespace bass
