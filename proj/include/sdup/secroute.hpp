#pragma once

#include <algorithm>
#include <cstddef>
#include <deque>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "sdup/error.hpp"
#include "sdup/topology.hpp"

namespace sdup {

using Path = std::vector<NodeId>;

struct PathSet {
  std::vector<Path> paths;
};

namespace detail {

// Lexicographically smallest shortest path from src to dst avoiding `removed`
// intermediates and the `banned_direct` edge. BFS from dst gives distances;
// the forward walk then takes the smallest-id neighbor one step closer.
inline std::optional<Path> lexi_shortest_path(const Topology& topo, NodeId src, NodeId dst,
                                              const std::unordered_set<NodeId>& removed, bool banned_direct) {
  auto usable = [&](NodeId from, NodeId to) {
    if (banned_direct && ((from == src && to == dst) || (from == dst && to == src))) return false;
    return to == src || to == dst || !removed.contains(to);
  };
  std::unordered_map<NodeId, std::size_t> dist{{dst, 0}};
  std::deque<NodeId> frontier{dst};
  while (!frontier.empty()) {
    const NodeId v = frontier.front();
    frontier.pop_front();
    if (v == src) continue;
    for (NodeId w : topo.neighbors(v)) {
      if (!usable(v, w) || dist.contains(w)) continue;
      dist[w] = dist[v] + 1;
      frontier.push_back(w);
    }
  }
  if (!dist.contains(src)) return std::nullopt;

  Path path{src};
  NodeId at = src;
  while (at != dst) {
    const std::size_t d = dist.at(at);
    NodeId best = std::numeric_limits<NodeId>::max();
    for (NodeId w : topo.neighbors(at)) {  // sorted ascending
      if (!usable(at, w) || w == src) continue;
      auto it = dist.find(w);
      if (it != dist.end() && it->second + 1 == d) {
        best = w;
        break;
      }
    }
    path.push_back(best);
    at = best;
  }
  return path;
}

}  // namespace detail

// Greedy node-disjoint discovery: take the shortest path (lexicographic
// tie-break), remove its intermediates, repeat. A direct src-dst edge is used
// at most once.
inline PathSet discover_disjoint_paths(const Topology& topo, NodeId src, NodeId dst, std::size_t max_paths) {
  if (src == dst) throw Error(ErrorCode::parameter, "source equals destination");
  if (!topo.contains(src) || !topo.contains(dst)) throw Error(ErrorCode::parameter, "endpoint not in topology");
  if (max_paths == 0) throw Error(ErrorCode::parameter, "max_paths must be >= 1");

  PathSet out;
  std::unordered_set<NodeId> removed;
  bool direct_used = false;
  while (out.paths.size() < max_paths) {
    auto path = detail::lexi_shortest_path(topo, src, dst, removed, direct_used);
    if (!path) break;
    if (path->size() == 2) direct_used = true;
    for (std::size_t i = 1; i + 1 < path->size(); ++i) removed.insert((*path)[i]);
    out.paths.push_back(std::move(*path));
  }
  if (out.paths.empty())
    throw Error(ErrorCode::unreachable, "no path from " + std::to_string(src) + " to " + std::to_string(dst));
  return out;
}

// Probability that at least one intermediate relay is compromised.
inline double path_security_cost(const Path& path, const Topology& topo) {
  double clean = 1.0;
  for (std::size_t i = 1; i + 1 < path.size(); ++i) clean *= 1.0 - topo.node(path[i]).compromise_prob;
  return 1.0 - clean;
}

// Minimum security cost; ties go to fewer hops, then the smaller node sequence.
inline Path select_path(const PathSet& set, const Topology& topo) {
  if (set.paths.empty()) throw Error(ErrorCode::parameter, "empty path set");
  const Path* best = &set.paths.front();
  double best_cost = path_security_cost(*best, topo);
  for (const auto& p : set.paths) {
    const double c = path_security_cost(p, topo);
    if (c < best_cost || (c == best_cost && (p.size() < best->size() || (p.size() == best->size() && p < *best)))) {
      best = &p;
      best_cost = c;
    }
  }
  return *best;
}

struct RedundancyConfig {
  std::size_t k = 3;                // base threshold
  std::size_t extra_shares = 1;     // r
  double mobility_threshold = 1.0;  // theta, m/s
};

struct RedundancyPlan {
  std::size_t k = 1;
  std::size_t n = 1;
  std::size_t duplicate_paths = 0;

  friend bool operator==(const RedundancyPlan&, const RedundancyPlan&) = default;
};

// Redundancy only when nodes move faster than theta on average and a second
// disjoint path exists.
inline RedundancyPlan redundancy_decision(double avg_mobility, std::size_t path_count, const RedundancyConfig& cfg) {
  if (path_count == 0) throw Error(ErrorCode::parameter, "path_count must be >= 1");
  if (cfg.k == 0) throw Error(ErrorCode::parameter, "k must be >= 1");
  if (avg_mobility > cfg.mobility_threshold && path_count >= 2)
    return {cfg.k, cfg.k + cfg.extra_shares, std::min<std::size_t>(1, path_count - 1)};
  return {cfg.k, cfg.k, 0};
}

}  // namespace sdup
