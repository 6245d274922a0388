#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "bass/engine.hpp"
#include "bass/error.hpp"
#include "bass/topology.hpp"
#include "bass/workload.hpp"

namespace bass {

/// Task as written in a scenario file; the compute-time map is optional and
/// falls back to the workload-wide homogeneous value.
struct ScenarioTask {
  TaskId id = 0;
  double split_size_mb = 0.0;
  std::vector<NodeId> replicas;
  std::optional<std::map<NodeId, double>> compute_time;
};

/// Serialized bundle of topology + workload + initial loads + knobs.
struct Scenario {
  int schema_version = 1;
  std::string name;
  std::uint64_t seed = 0;
  double slot_duration = 1.0;
  std::optional<double> fixed_transfer_time;
  TopologySpec topology;
  std::optional<double> homogeneous_compute_time;
  std::vector<ScenarioTask> tasks;
  std::map<NodeId, double> initial_idle;
  std::map<NodeId, std::vector<ProgressSample>> initial_progress;
  std::optional<double> progress_fallback_remaining;
  std::vector<NodeId> available_nodes;  // empty means all compute nodes
  std::optional<QueueConfig> qos;

  TransferModel transfer_model() const { return {fixed_transfer_time}; }

  std::vector<NodeId> available() const {
    return available_nodes.empty() ? topology.compute_nodes : available_nodes;
  }

  /// Workload with every task's compute time expanded over all compute nodes.
  Job job() const {
    Job j;
    for (const ScenarioTask& st : tasks) {
      Task t;
      t.id = st.id;
      t.split_size_mb = st.split_size_mb;
      t.replicas = st.replicas;
      if (st.compute_time) {
        t.compute_time = *st.compute_time;
      } else {
        for (NodeId n : topology.compute_nodes) t.compute_time[n] = *homogeneous_compute_time;
      }
      j.tasks.push_back(std::move(t));
    }
    return j;
  }

  /// One NodeState per available node; idle times come from the explicit map
  /// or from the progress-rate estimator.
  std::vector<NodeState> node_states() const {
    std::vector<NodeState> states;
    for (NodeId n : available()) {
      NodeState s;
      s.node = n;
      if (auto it = initial_idle.find(n); it != initial_idle.end()) {
        s.idle_at = it->second;
      } else if (auto pt = initial_progress.find(n); pt != initial_progress.end()) {
        double worst = 0.0;
        for (const ProgressSample& sample : pt->second) {
          double rem;
          if (sample.progress_score <= 0.0 && progress_fallback_remaining)
            rem = *progress_fallback_remaining;
          else
            rem = remaining_time(sample);
          worst = std::max(worst, rem);
        }
        s.idle_at = worst;
      }
      states.push_back(std::move(s));
    }
    return states;
  }
};

namespace detail {

inline TrafficClass traffic_class_from(const std::string& s) {
  if (s == "shuffle") return TrafficClass::shuffle;
  if (s == "background") return TrafficClass::background;
  if (s == "other") return TrafficClass::other;
  fail(Errc::parse_error, "unknown traffic class '" + s + "'");
}

inline std::map<NodeId, double> parse_node_map(const nlohmann::json& j, const char* what) {
  std::map<NodeId, double> out;
  for (const auto& [key, value] : j.items()) {
    try {
      out[static_cast<NodeId>(std::stol(key))] = value.get<double>();
    } catch (const std::exception&) {
      fail(Errc::parse_error, std::string(what) + " has a non-numeric node key '" + key + "'");
    }
  }
  return out;
}

}  // namespace detail

/// Validates the cross-references a parsed scenario must satisfy; throws
/// ValidationError (or the topology's own errors) otherwise.
inline void validate_scenario(const Scenario& s) {
  if (s.schema_version != 1)
    fail(Errc::validation_error, "unsupported schema_version " + std::to_string(s.schema_version));
  if (s.slot_duration <= 0.0) fail(Errc::validation_error, "slot_duration must be positive");
  if (s.fixed_transfer_time && *s.fixed_transfer_time <= 0.0)
    fail(Errc::validation_error, "fixed_transfer_time must be positive");

  Topology topo = build_topology(s.topology);

  std::set<TaskId> ids;
  for (const ScenarioTask& t : s.tasks) {
    if (!ids.insert(t.id).second) fail(Errc::duplicate_id, "duplicate task id " + std::to_string(t.id));
    if (t.split_size_mb < 0.0)
      fail(Errc::validation_error, "task " + std::to_string(t.id) + " has a negative split size");
    if (t.replicas.empty() && t.split_size_mb > 0.0)
      fail(Errc::validation_error, "task " + std::to_string(t.id) + " has data but no replicas");
    for (NodeId r : t.replicas)
      if (!topo.is_compute(r))
        fail(Errc::validation_error,
             "task " + std::to_string(t.id) + " replica on unknown node " + std::to_string(r));
    if (!t.compute_time && !s.homogeneous_compute_time)
      fail(Errc::validation_error,
           "task " + std::to_string(t.id) + " has no compute time and no homogeneous default exists");
    if (t.compute_time)
      for (const auto& [node, tp] : *t.compute_time) {
        if (!topo.is_compute(node))
          fail(Errc::validation_error,
               "task " + std::to_string(t.id) + " compute time for unknown node " + std::to_string(node));
        if (tp < 0.0) fail(Errc::validation_error, "task " + std::to_string(t.id) + " has a negative compute time");
      }
  }
  if (s.homogeneous_compute_time && *s.homogeneous_compute_time < 0.0)
    fail(Errc::validation_error, "homogeneous compute time must be non-negative");

  for (NodeId n : s.available_nodes)
    if (!topo.is_compute(n))
      fail(Errc::validation_error, "available node " + std::to_string(n) + " is not a compute node");
  if (!s.available_nodes.empty()) {
    std::set<NodeId> uniq(s.available_nodes.begin(), s.available_nodes.end());
    if (uniq.size() != s.available_nodes.size()) fail(Errc::duplicate_id, "duplicate available node");
  }
  // Per-task compute times must cover every node the scheduler may pick.
  for (const ScenarioTask& t : s.tasks)
    if (t.compute_time)
      for (NodeId n : s.available())
        if (!t.compute_time->count(n))
          fail(Errc::validation_error,
               "task " + std::to_string(t.id) + " lacks a compute time for available node " + std::to_string(n));

  for (const auto& [node, idle] : s.initial_idle) {
    if (!topo.is_compute(node))
      fail(Errc::validation_error, "initial idle for unknown node " + std::to_string(node));
    if (idle < 0.0) fail(Errc::validation_error, "initial idle for node " + std::to_string(node) + " is negative");
    if (s.initial_progress.count(node))
      fail(Errc::validation_error,
           "node " + std::to_string(node) + " has both an idle time and progress samples");
  }
  for (const auto& [node, samples] : s.initial_progress) {
    if (!topo.is_compute(node))
      fail(Errc::validation_error, "progress samples for unknown node " + std::to_string(node));
    for (const ProgressSample& p : samples) {
      if (p.progress_score < 0.0 || p.progress_score > 1.0)
        fail(Errc::validation_error, "progress score out of [0,1] on node " + std::to_string(node));
      if (p.elapsed <= 0.0)
        fail(Errc::validation_error, "progress sample with non-positive elapsed time on node " + std::to_string(node));
      if (p.progress_score == 0.0 && !s.progress_fallback_remaining)
        fail(Errc::validation_error,
             "progress score 0 on node " + std::to_string(node) +
                 " needs progress_fallback_remaining to be set");
    }
  }

  if (s.qos) {
    const QueueConfig& q = *s.qos;
    if (q.max_rate_mbps <= 0.0) fail(Errc::validation_error, "qos max_rate_mbps must be positive");
    std::set<std::string> names;
    for (const QueueConfig::Queue& queue : q.queues) {
      if (!names.insert(queue.name).second) fail(Errc::duplicate_id, "duplicate queue '" + queue.name + "'");
      if (queue.rate_mbps <= 0.0) fail(Errc::validation_error, "queue '" + queue.name + "' rate must be positive");
      if (queue.rate_mbps > q.max_rate_mbps + kTimeTol)
        fail(Errc::validation_error, "queue '" + queue.name + "' rate exceeds the switch max rate");
    }
    for (const auto& [cls, queue] : q.class_map)
      if (!names.count(queue))
        fail(Errc::validation_error, "traffic class " + to_string(cls) + " maps to unknown queue '" + queue + "'");
  }
}

inline Scenario parse_scenario(const nlohmann::json& j) {
  Scenario s;
  try {
    s.schema_version = j.at("schema_version").get<int>();
    s.name = j.value("name", std::string{});
    s.seed = j.value("seed", std::uint64_t{0});
    s.slot_duration = j.value("slot_duration", 1.0);
    if (j.contains("fixed_transfer_time")) s.fixed_transfer_time = j.at("fixed_transfer_time").get<double>();

    const auto& topo = j.at("topology");
    s.topology.compute_nodes = topo.at("compute_nodes").get<std::vector<NodeId>>();
    s.topology.switches = topo.value("switches", std::vector<VertexId>{});
    for (const auto& l : topo.value("links", nlohmann::json::array())) {
      Link link;
      link.id = l.at("id").get<LinkId>();
      link.a = l.at("a").get<VertexId>();
      link.b = l.at("b").get<VertexId>();
      link.capacity_mbps = l.at("capacity_mbps").get<double>();
      s.topology.links.push_back(link);
    }

    const auto& wl = j.at("workload");
    if (wl.contains("homogeneous_compute_time"))
      s.homogeneous_compute_time = wl.at("homogeneous_compute_time").get<double>();
    for (const auto& t : wl.at("tasks")) {
      ScenarioTask st;
      st.id = t.at("id").get<TaskId>();
      st.split_size_mb = t.at("split_size_mb").get<double>();
      st.replicas = t.value("replicas", std::vector<NodeId>{});
      std::sort(st.replicas.begin(), st.replicas.end());
      st.replicas.erase(std::unique(st.replicas.begin(), st.replicas.end()), st.replicas.end());
      if (t.contains("compute_time")) st.compute_time = detail::parse_node_map(t.at("compute_time"), "compute_time");
      s.tasks.push_back(std::move(st));
    }

    if (j.contains("initial")) {
      const auto& init = j.at("initial");
      if (init.contains("idle")) s.initial_idle = detail::parse_node_map(init.at("idle"), "initial.idle");
      if (init.contains("progress"))
        for (const auto& [key, samples] : init.at("progress").items()) {
          NodeId node = static_cast<NodeId>(std::stol(key));
          for (const auto& p : samples)
            s.initial_progress[node].push_back(
                {p.at("score").get<double>(), p.at("elapsed").get<double>()});
        }
      if (init.contains("progress_fallback_remaining"))
        s.progress_fallback_remaining = init.at("progress_fallback_remaining").get<double>();
    }

    s.available_nodes = j.value("available_nodes", std::vector<NodeId>{});
    std::sort(s.available_nodes.begin(), s.available_nodes.end());

    if (j.contains("qos")) {
      QueueConfig q;
      const auto& qj = j.at("qos");
      q.max_rate_mbps = qj.at("max_rate_mbps").get<double>();
      for (const auto& entry : qj.at("queues"))
        q.queues.push_back({entry.at("name").get<std::string>(), entry.at("rate_mbps").get<double>()});
      for (const auto& [cls, queue] : qj.at("class_map").items())
        q.class_map[detail::traffic_class_from(cls)] = queue.get<std::string>();
      s.qos = std::move(q);
    }
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    fail(Errc::parse_error, std::string("malformed scenario: ") + e.what());
  }
  validate_scenario(s);
  return s;
}

inline nlohmann::json scenario_json(const Scenario& s) {
  nlohmann::json j;
  j["schema_version"] = s.schema_version;
  j["name"] = s.name;
  j["seed"] = s.seed;
  j["slot_duration"] = s.slot_duration;
  if (s.fixed_transfer_time) j["fixed_transfer_time"] = *s.fixed_transfer_time;

  nlohmann::json topo;
  topo["compute_nodes"] = s.topology.compute_nodes;
  topo["switches"] = s.topology.switches;
  topo["links"] = nlohmann::json::array();
  for (const Link& l : s.topology.links)
    topo["links"].push_back({{"id", l.id}, {"a", l.a}, {"b", l.b}, {"capacity_mbps", l.capacity_mbps}});
  j["topology"] = std::move(topo);

  nlohmann::json wl;
  if (s.homogeneous_compute_time) wl["homogeneous_compute_time"] = *s.homogeneous_compute_time;
  wl["tasks"] = nlohmann::json::array();
  for (const ScenarioTask& t : s.tasks) {
    nlohmann::json tj{{"id", t.id}, {"split_size_mb", t.split_size_mb}, {"replicas", t.replicas}};
    if (t.compute_time) {
      nlohmann::json ct;
      for (const auto& [node, tp] : *t.compute_time) ct[std::to_string(node)] = tp;
      tj["compute_time"] = std::move(ct);
    }
    wl["tasks"].push_back(std::move(tj));
  }
  j["workload"] = std::move(wl);

  nlohmann::json init;
  if (!s.initial_idle.empty()) {
    nlohmann::json idle;
    for (const auto& [node, t] : s.initial_idle) idle[std::to_string(node)] = t;
    init["idle"] = std::move(idle);
  }
  if (!s.initial_progress.empty()) {
    nlohmann::json prog;
    for (const auto& [node, samples] : s.initial_progress) {
      nlohmann::json arr = nlohmann::json::array();
      for (const ProgressSample& p : samples) arr.push_back({{"score", p.progress_score}, {"elapsed", p.elapsed}});
      prog[std::to_string(node)] = std::move(arr);
    }
    init["progress"] = std::move(prog);
  }
  if (s.progress_fallback_remaining) init["progress_fallback_remaining"] = *s.progress_fallback_remaining;
  if (!init.empty()) j["initial"] = std::move(init);

  if (!s.available_nodes.empty()) j["available_nodes"] = s.available_nodes;

  if (s.qos) {
    nlohmann::json qj;
    qj["max_rate_mbps"] = s.qos->max_rate_mbps;
    qj["queues"] = nlohmann::json::array();
    for (const auto& q : s.qos->queues) qj["queues"].push_back({{"name", q.name}, {"rate_mbps", q.rate_mbps}});
    nlohmann::json cm;
    for (const auto& [cls, queue] : s.qos->class_map) cm[to_string(cls)] = queue;
    qj["class_map"] = std::move(cm);
    j["qos"] = std::move(qj);
  }
  return j;
}

/// The built-in golden scenario: the four-node, two-switch, one-router
/// cluster with eight 100 Mbps links, nine 64 MB tasks with two replicas
/// each, homogeneous 9 s compute, fixed 5 s block transfers and initial
/// idle times 3/9/20/7.
inline Scenario example1() {
  Scenario s;
  s.name = "example1";
  s.slot_duration = 1.0;
  s.fixed_transfer_time = 5.0;
  s.topology.compute_nodes = {1, 2, 3, 4};
  // 5, 6: switches; 7: router; 8: master; 9: controller.
  s.topology.switches = {5, 6, 7, 8, 9};
  s.topology.links = {
      {1, 1, 5, 100.0}, {2, 2, 5, 100.0}, {3, 3, 6, 100.0}, {4, 4, 6, 100.0},
      {5, 8, 7, 100.0}, {6, 9, 7, 100.0}, {7, 5, 7, 100.0}, {8, 6, 7, 100.0},
  };
  s.homogeneous_compute_time = 9.0;
  const std::vector<std::vector<NodeId>> replicas = {
      {2, 3}, {1, 4}, {1, 2}, {1, 3}, {2, 4}, {2, 3}, {1, 3}, {2, 4}, {1, 3},
  };
  for (TaskId id = 1; id <= 9; ++id)
    s.tasks.push_back({id, 64.0, replicas[static_cast<std::size_t>(id - 1)], std::nullopt});
  s.initial_idle = {{1, 3.0}, {2, 9.0}, {3, 20.0}, {4, 7.0}};
  QueueConfig qos;
  qos.max_rate_mbps = 150.0;
  qos.queues = {{"q1", 100.0}, {"q2", 40.0}, {"q3", 10.0}};
  qos.class_map = {{TrafficClass::shuffle, "q1"},
                   {TrafficClass::other, "q2"},
                   {TrafficClass::background, "q3"}};
  s.qos = qos;
  return s;
}

/// Loads a scenario from a file path, or by built-in name ("example1").
inline Scenario load_scenario(const std::string& path_or_name) {
  if (path_or_name == "example1") return example1();
  std::ifstream in(path_or_name);
  if (!in) fail(Errc::parse_error, "cannot open scenario file '" + path_or_name + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::parse_error, std::string("scenario JSON: ") + e.what());
  }
  return parse_scenario(j);
}

struct ValueRange {
  double lo = 0.0;
  double hi = 0.0;
};

/// Knobs for the random scenario generator. Values are drawn uniformly on a
/// 0.25-step grid so every generated number is an exact binary double.
struct GeneratorParams {
  int scenario_count = 1;
  int node_count = 4;
  int task_count = 9;
  int replica_count = 2;
  int storage_node_count = 0;  // replicas land on nodes 1..k; 0 means every node
  ValueRange split_size_mb{64.0, 64.0};
  ValueRange compute_time_s{9.0, 9.0};
  ValueRange initial_idle_s{0.0, 0.0};
  double link_capacity_mbps = 100.0;
  double slot_duration = 1.0;
  std::optional<double> fixed_transfer_time;
  std::uint64_t seed = 0;
  std::string name_prefix = "gen";
};

namespace detail {

/// Deterministic draws on top of mt19937_64; avoids std::uniform_*'s
/// implementation-defined sequences.
class Draw {
 public:
  explicit Draw(std::uint64_t seed) : eng_(seed) {}
  std::uint64_t next() { return eng_(); }
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(next() % n); }
  double grid(const ValueRange& r) {  // uniform on {lo, lo+0.25, ..., hi}
    auto steps = static_cast<std::uint64_t>((r.hi - r.lo) / 0.25 + 0.5);
    return r.lo + 0.25 * static_cast<double>(steps == 0 ? 0 : next() % (steps + 1));
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace detail

/// Deterministic batch of scenarios on two-switch tree topologies scaled by
/// node count.
inline std::vector<Scenario> generate_scenarios(const GeneratorParams& p) {
  if (p.scenario_count < 1 || p.node_count < 1 || p.task_count < 0 || p.replica_count < 1)
    fail(Errc::validation_error, "generator counts must be positive");
  int storage = p.storage_node_count == 0 ? p.node_count : p.storage_node_count;
  if (storage < 1 || storage > p.node_count)
    fail(Errc::validation_error, "storage node count must lie within the node count");
  if (p.replica_count > storage)
    fail(Errc::validation_error, "replica count " + std::to_string(p.replica_count) +
                                     " exceeds the replica-holding node count " + std::to_string(storage));
  if (p.split_size_mb.lo < 0 || p.compute_time_s.lo < 0 || p.initial_idle_s.lo < 0 ||
      p.split_size_mb.hi < p.split_size_mb.lo || p.compute_time_s.hi < p.compute_time_s.lo ||
      p.initial_idle_s.hi < p.initial_idle_s.lo)
    fail(Errc::validation_error, "generator value ranges must be non-negative with lo <= hi");
  if (p.link_capacity_mbps <= 0.0) fail(Errc::validation_error, "link capacity must be positive");

  std::vector<Scenario> out;
  for (int k = 0; k < p.scenario_count; ++k) {
    detail::Draw draw(p.seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(k));
    Scenario s;
    s.name = p.name_prefix + "-" + std::to_string(p.seed) + "-" + std::to_string(k);
    s.seed = draw.next();
    s.slot_duration = p.slot_duration;
    s.fixed_transfer_time = p.fixed_transfer_time;

    const int n = p.node_count;
    VertexId sw_a = n + 1, sw_b = n + 2, router = n + 3;
    s.topology.switches = {sw_a, sw_b, router};
    for (NodeId i = 1; i <= n; ++i) {
      s.topology.compute_nodes.push_back(i);
      s.topology.links.push_back({i, i, i <= (n + 1) / 2 ? sw_a : sw_b, p.link_capacity_mbps});
    }
    s.topology.links.push_back({n + 1, sw_a, router, p.link_capacity_mbps});
    s.topology.links.push_back({n + 2, sw_b, router, p.link_capacity_mbps});

    for (TaskId t = 1; t <= p.task_count; ++t) {
      ScenarioTask st;
      st.id = t;
      st.split_size_mb = draw.grid(p.split_size_mb);
      // Partial Fisher-Yates for replica_count distinct replica-holding nodes.
      std::vector<NodeId> pool(s.topology.compute_nodes.begin(), s.topology.compute_nodes.begin() + storage);
      for (int r = 0; r < p.replica_count; ++r) {
        std::size_t j = r + draw.index(pool.size() - static_cast<std::size_t>(r));
        std::swap(pool[static_cast<std::size_t>(r)], pool[j]);
        st.replicas.push_back(pool[static_cast<std::size_t>(r)]);
      }
      std::sort(st.replicas.begin(), st.replicas.end());
      std::map<NodeId, double> tp;
      double uniform_tp = draw.grid(p.compute_time_s);
      for (NodeId node : s.topology.compute_nodes) tp[node] = uniform_tp;
      st.compute_time = std::move(tp);
      s.tasks.push_back(std::move(st));
    }
    for (NodeId node : s.topology.compute_nodes) s.initial_idle[node] = draw.grid(p.initial_idle_s);
    validate_scenario(s);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace bass
