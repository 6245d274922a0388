#pragma once

#include <algorithm>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "bass/error.hpp"
#include "bass/slot_ledger.hpp"
#include "bass/topology.hpp"

namespace bass {

struct Interval {
  double start = 0.0;
  double end = 0.0;

  double length() const { return end - start; }
  bool empty() const { return end <= start + kTimeTol && end >= start - kTimeTol; }
};

/// One task of a job: the input split it consumes, where the split's replicas
/// live, and how long the computation takes per node.
struct Task {
  TaskId id = 0;
  double split_size_mb = 0.0;
  std::vector<NodeId> replicas;            // sorted, nonempty unless split_size_mb == 0
  std::map<NodeId, double> compute_time;   // TP per node, seconds

  bool local_to(NodeId node) const {
    return split_size_mb == 0.0 || std::binary_search(replicas.begin(), replicas.end(), node);
  }

  double tp(NodeId node) const {
    auto it = compute_time.find(node);
    if (it == compute_time.end())
      fail(Errc::validation_error,
           "task " + std::to_string(id) + " has no compute time for node " + std::to_string(node));
    return it->second;
  }
};

/// Tasks in scheduling order.
struct Job {
  std::vector<Task> tasks;
};

/// What a node has been given so far and when it frees up.
struct NodeState {
  NodeId node = 0;
  double idle_at = 0.0;
  struct Entry {
    TaskId task;
    Interval transfer;  // empty when the task runs on its data
    Interval compute;
  };
  std::vector<Entry> assigned;
};

struct ProgressSample {
  double progress_score = 0.0;  // in [0, 1]
  double elapsed = 0.0;         // seconds the task has been running, > 0
};

/// TE = TP + TM.
inline double execution_time(double tm, double tp) { return tp + tm; }

/// Completion = execution time stacked on the node's idle time.
inline double completion_time(double te, double idle_at) { return te + idle_at; }

/// Remaining run time under the progress-rate model: rate = score / elapsed,
/// remaining = (1 - score) / rate.
inline double remaining_time(const ProgressSample& s) {
  if (s.elapsed <= 0.0) fail(Errc::validation_error, "progress sample with non-positive elapsed time");
  if (s.progress_score <= 0.0)
    fail(Errc::undefined_rate, "progress score 0 leaves the progress rate undefined");
  return (1.0 - s.progress_score) * s.elapsed / s.progress_score;
}

/// Node idle estimate: now plus the largest remaining time over the tasks
/// currently running on it. A node with nothing running is idle now.
inline double estimate_idle(std::span<const ProgressSample> samples, double now = 0.0) {
  double worst = 0.0;
  for (const ProgressSample& s : samples) worst = std::max(worst, remaining_time(s));
  return now + worst;
}

/// Node minimizing the completion time under the supplied cost oracle;
/// ties break toward the smallest node id.
template <typename CostFn>
const NodeState& best_node_for_task(const Task& task, std::span<const NodeState> nodes, CostFn&& cost) {
  if (nodes.empty()) fail(Errc::no_available_node, "no available node for task " + std::to_string(task.id));
  const NodeState* best = nullptr;
  double best_cost = 0.0;
  for (const NodeState& n : nodes) {
    double c = cost(task, n);
    if (!best || c < best_cost - kTimeTol || (c <= best_cost + kTimeTol && n.node < best->node)) {
      best = &n;
      best_cost = c;
    }
  }
  return *best;
}

}  // namespace bass
