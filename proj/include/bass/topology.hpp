#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "bass/error.hpp"

namespace bass {

// Compute nodes and switches share one vertex id space; ids are 1-based and
// stable across runs. NodeId is a vertex id that designates a compute node.
using VertexId = std::int32_t;
using NodeId = VertexId;
using LinkId = std::int32_t;
using TaskId = std::int32_t;

struct Link {
  LinkId id = 0;
  VertexId a = 0;
  VertexId b = 0;
  double capacity_mbps = 0.0;
};

using Path = std::vector<LinkId>;

struct TopologySpec {
  std::vector<NodeId> compute_nodes;
  std::vector<VertexId> switches;  // switches, routers and other non-compute vertices
  std::vector<Link> links;
};

/// Cluster graph: compute nodes, switches/routers and capacity-limited links.
/// Immutable after construction; switches are zero-delay and unconstrained,
/// only links carry bandwidth.
class Topology {
 public:
  const std::vector<NodeId>& compute_nodes() const { return compute_; }
  const std::vector<VertexId>& switches() const { return switches_; }
  const std::vector<Link>& links() const { return links_; }

  bool is_compute(VertexId v) const {
    return std::binary_search(compute_.begin(), compute_.end(), v);
  }

  const Link& link(LinkId id) const {
    auto it = link_by_id_.find(id);
    if (it == link_by_id_.end()) fail(Errc::validation_error, "unknown link id " + std::to_string(id));
    return links_[it->second];
  }

  /// Bottleneck capacity along a path; infinity for an empty path.
  double path_capacity_mbps(const Path& path) const {
    double cap = std::numeric_limits<double>::infinity();
    for (LinkId id : path) cap = std::min(cap, link(id).capacity_mbps);
    return cap;
  }

  /// Deterministic minimum-hop path from src to dst; among equal-hop paths the
  /// lexicographically smallest link-id sequence, evaluated on the canonical
  /// direction (smaller endpoint first) so that route(a,b) and route(b,a)
  /// traverse the same links. route(x,x) is empty. Compute-to-compute routes
  /// are precomputed at build time.
  Path route(VertexId src, VertexId dst) const {
    if (src == dst) return {};
    if (auto it = route_cache_.find({std::min(src, dst), std::max(src, dst)}); it != route_cache_.end()) {
      Path p = it->second;
      if (src > dst) std::reverse(p.begin(), p.end());
      return p;
    }
    if (src < dst) return forward_route(src, dst);
    Path p = forward_route(dst, src);
    std::reverse(p.begin(), p.end());
    return p;
  }

  friend Topology build_topology(const TopologySpec& spec);

 private:
  Path forward_route(VertexId src, VertexId dst) const {
    // BFS levels from dst, then walk from src always taking the smallest link
    // id that still makes progress; this yields the lexicographically
    // smallest minimum-hop link sequence.
    std::map<VertexId, int> dist;
    dist[dst] = 0;
    std::deque<VertexId> queue{dst};
    while (!queue.empty()) {
      VertexId v = queue.front();
      queue.pop_front();
      auto it = adjacency_.find(v);
      if (it == adjacency_.end()) continue;
      for (const auto& [link_id, peer] : it->second) {
        if (dist.emplace(peer, dist[v] + 1).second) queue.push_back(peer);
      }
    }
    auto at = dist.find(src);
    if (at == dist.end())
      fail(Errc::no_path, "no path between vertex " + std::to_string(src) + " and " + std::to_string(dst));
    Path path;
    VertexId v = src;
    int remaining = at->second;
    while (v != dst) {
      const auto& edges = adjacency_.at(v);  // sorted by link id
      bool advanced = false;
      for (const auto& [link_id, peer] : edges) {
        auto d = dist.find(peer);
        if (d != dist.end() && d->second == remaining - 1) {
          path.push_back(link_id);
          v = peer;
          --remaining;
          advanced = true;
          break;
        }
      }
      if (!advanced) fail(Errc::no_path, "routing walk stalled at vertex " + std::to_string(v));
    }
    return path;
  }

  std::vector<NodeId> compute_;      // sorted
  std::vector<VertexId> switches_;   // sorted
  std::vector<Link> links_;          // sorted by id
  std::map<LinkId, std::size_t> link_by_id_;
  std::map<VertexId, std::vector<std::pair<LinkId, VertexId>>> adjacency_;  // edges sorted by link id
  std::map<std::pair<VertexId, VertexId>, Path> route_cache_;              // canonical direction only
};

/// Validates and builds a Topology. Rejects duplicate ids, non-positive
/// capacities, self-loops, links on unknown vertices and graphs that do not
/// connect all compute nodes.
inline Topology build_topology(const TopologySpec& spec) {
  Topology topo;
  topo.compute_ = spec.compute_nodes;
  topo.switches_ = spec.switches;
  std::sort(topo.compute_.begin(), topo.compute_.end());
  std::sort(topo.switches_.begin(), topo.switches_.end());

  std::set<VertexId> vertices;
  for (VertexId v : spec.compute_nodes)
    if (!vertices.insert(v).second) fail(Errc::duplicate_id, "duplicate vertex id " + std::to_string(v));
  for (VertexId v : spec.switches)
    if (!vertices.insert(v).second) fail(Errc::duplicate_id, "duplicate vertex id " + std::to_string(v));

  topo.links_ = spec.links;
  std::sort(topo.links_.begin(), topo.links_.end(), [](const Link& x, const Link& y) { return x.id < y.id; });
  for (std::size_t i = 0; i < topo.links_.size(); ++i) {
    const Link& l = topo.links_[i];
    if (!topo.link_by_id_.emplace(l.id, i).second)
      fail(Errc::duplicate_id, "duplicate link id " + std::to_string(l.id));
    if (l.capacity_mbps <= 0.0)
      fail(Errc::non_positive_capacity, "link " + std::to_string(l.id) + " has capacity " + std::to_string(l.capacity_mbps));
    if (l.a == l.b) fail(Errc::validation_error, "link " + std::to_string(l.id) + " is a self-loop");
    if (!vertices.count(l.a) || !vertices.count(l.b))
      fail(Errc::validation_error, "link " + std::to_string(l.id) + " references an unknown vertex");
    topo.adjacency_[l.a].emplace_back(l.id, l.b);
    topo.adjacency_[l.b].emplace_back(l.id, l.a);
  }
  for (auto& [v, edges] : topo.adjacency_) std::sort(edges.begin(), edges.end());

  if (topo.compute_.empty()) fail(Errc::validation_error, "topology has no compute nodes");

  // Connectivity over compute nodes (a single-node topology is trivially fine).
  std::set<VertexId> seen{topo.compute_.front()};
  std::deque<VertexId> queue{topo.compute_.front()};
  while (!queue.empty()) {
    VertexId v = queue.front();
    queue.pop_front();
    auto it = topo.adjacency_.find(v);
    if (it == topo.adjacency_.end()) continue;
    for (const auto& [link_id, peer] : it->second)
      if (seen.insert(peer).second) queue.push_back(peer);
  }
  for (NodeId n : topo.compute_)
    if (!seen.count(n))
      fail(Errc::disconnected_graph, "compute node " + std::to_string(n) + " is not reachable");

  for (std::size_t i = 0; i < topo.compute_.size(); ++i)
    for (std::size_t j = i + 1; j < topo.compute_.size(); ++j)
      topo.route_cache_[{topo.compute_[i], topo.compute_[j]}] =
          topo.forward_route(topo.compute_[i], topo.compute_[j]);
  return topo;
}

}  // namespace bass
