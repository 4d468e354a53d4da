#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sdup/error.hpp"
#include "sdup/random.hpp"

namespace sdup {

using NodeId = std::uint32_t;

struct Vec2 {
  double x = 0;
  double y = 0;

  friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline double distance(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

struct NodeState {
  NodeId id = 0;
  Vec2 position;
  double speed = 0;    // m/s
  double heading = 0;  // radians
  double radio_range = 250;
  double compromise_prob = 0;
  bool compromised = false;
  std::optional<Vec2> waypoint;  // drawn lazily by the mobility model

  friend bool operator==(const NodeState&, const NodeState&) = default;
};

struct Arena {
  double width = 1000;
  double height = 1000;

  friend bool operator==(const Arena&, const Arena&) = default;
};

// links[i] holds the ids linked to nodes[i], sorted ascending.
using Adjacency = std::vector<std::vector<NodeId>>;

// Unit-disk links: i and j are linked iff their distance is within both ranges.
inline Adjacency build_links(const std::vector<NodeState>& nodes) {
  {
    std::vector<NodeId> ids;
    ids.reserve(nodes.size());
    for (const auto& n : nodes) ids.push_back(n.id);
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
      throw Error(ErrorCode::configuration, "duplicate node id");
  }
  Adjacency links(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (std::size_t j = i + 1; j < nodes.size(); ++j) {
      const double reach = std::min(nodes[i].radio_range, nodes[j].radio_range);
      if (distance(nodes[i].position, nodes[j].position) <= reach) {
        links[i].push_back(nodes[j].id);
        links[j].push_back(nodes[i].id);
      }
    }
  }
  for (auto& l : links) std::sort(l.begin(), l.end());
  return links;
}

class Topology {
 public:
  Topology() = default;
  Topology(std::vector<NodeState> nodes, Arena arena) : arena_(arena), nodes_(std::move(nodes)) {
    for (const auto& n : nodes_) {
      if (!(n.radio_range > 0)) throw Error(ErrorCode::configuration, "node " + std::to_string(n.id) + ": radio range must be > 0");
      if (!(n.compromise_prob >= 0 && n.compromise_prob <= 1))
        throw Error(ErrorCode::configuration, "node " + std::to_string(n.id) + ": compromise_prob outside [0, 1]");
    }
    rebuild_links();
  }

  const Arena& arena() const noexcept { return arena_; }
  const std::vector<NodeState>& nodes() const noexcept { return nodes_; }
  std::vector<NodeState>& mutable_nodes() noexcept { return nodes_; }
  std::size_t size() const noexcept { return nodes_.size(); }

  bool contains(NodeId id) const { return index_.contains(id); }

  std::size_t index_of(NodeId id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw Error(ErrorCode::parameter, "unknown node " + std::to_string(id));
    return it->second;
  }

  const NodeState& node(NodeId id) const { return nodes_[index_of(id)]; }
  NodeState& node(NodeId id) { return nodes_[index_of(id)]; }

  const std::vector<NodeId>& neighbors(NodeId id) const { return links_[index_of(id)]; }

  bool linked(NodeId a, NodeId b) const {
    const auto& n = neighbors(a);
    return std::binary_search(n.begin(), n.end(), b);
  }

  // Call after positions or ranges change.
  void rebuild_links() {
    links_ = build_links(nodes_);
    index_.clear();
    for (std::size_t i = 0; i < nodes_.size(); ++i) index_[nodes_[i].id] = i;
  }

 private:
  Arena arena_;
  std::vector<NodeState> nodes_;
  Adjacency links_;
  std::unordered_map<NodeId, std::size_t> index_;
};

inline double average_mobility(const Topology& topo) {
  if (topo.size() == 0) throw Error(ErrorCode::parameter, "average mobility of an empty topology");
  double sum = 0;
  for (const auto& n : topo.nodes()) sum += n.speed;
  return sum / static_cast<double>(topo.size());
}

template <class Rng>
Vec2 random_point(const Arena& arena, Rng& rng) {
  const double x = uniform_real(rng, 0.0, arena.width);
  const double y = uniform_real(rng, 0.0, arena.height);
  return {x, y};
}

// Random waypoint: each node travels speed*dt along its heading toward its
// waypoint; on arrival it draws a new waypoint uniformly in the arena and
// continues with whatever distance is left. Links are rebuilt afterwards.
template <class Rng>
void step_mobility(Topology& topo, double dt, Rng& rng) {
  if (!(dt > 0)) throw Error(ErrorCode::parameter, "mobility step must be > 0");
  const auto& arena = topo.arena();
  for (auto& n : topo.mutable_nodes()) {
    if (n.speed <= 0) continue;
    if (!n.waypoint) {
      n.waypoint = random_point(arena, rng);
      n.heading = std::atan2(n.waypoint->y - n.position.y, n.waypoint->x - n.position.x);
    }
    double remaining = n.speed * dt;
    for (int legs = 0; remaining > 0 && legs < 64; ++legs) {
      const double to_go = distance(n.position, *n.waypoint);
      if (to_go > remaining) {
        n.position.x += remaining * std::cos(n.heading);
        n.position.y += remaining * std::sin(n.heading);
        break;
      }
      n.position = *n.waypoint;
      remaining -= to_go;
      n.waypoint = random_point(arena, rng);
      n.heading = std::atan2(n.waypoint->y - n.position.y, n.waypoint->x - n.position.x);
    }
    n.position.x = std::clamp(n.position.x, 0.0, arena.width);
    n.position.y = std::clamp(n.position.y, 0.0, arena.height);
  }
  topo.rebuild_links();
}

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto sp = line.find(' ', start);
    out.push_back(line.substr(start, sp == std::string_view::npos ? std::string_view::npos : sp - start));
    if (sp == std::string_view::npos) break;
    start = sp + 1;
  }
  return out;
}

inline double parse_decimal(std::string_view field, std::size_t line_no) {
  double value = 0;
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, value, std::chars_format::fixed);
  if (field.empty() || ec != std::errc() || ptr != end)
    throw Error(ErrorCode::configuration, "line " + std::to_string(line_no) + ": bad decimal '" + std::string(field) + "'");
  return value;
}

inline NodeId parse_id(std::string_view field, std::size_t line_no) {
  NodeId value = 0;
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (field.empty() || ec != std::errc() || ptr != end)
    throw Error(ErrorCode::configuration, "line " + std::to_string(line_no) + ": bad node id '" + std::string(field) + "'");
  return value;
}

inline std::string format_decimal(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed);
  return std::string(buf, ptr);
}

}  // namespace detail

// Line-oriented topology file:
//   arena <width> <height>
//   node <id> <x> <y> <speed> <range> <compromise_prob>
// Fields are separated by exactly one space; '#' starts a comment.
inline Topology parse_topology(std::string_view text) {
  Arena arena;
  std::vector<NodeState> nodes;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    while (!line.empty() && line.back() == ' ') line.remove_suffix(1);
    if (line.empty()) continue;

    const auto f = detail::split_fields(line);
    if (f[0] == "arena") {
      if (f.size() != 3) throw Error(ErrorCode::configuration, "line " + std::to_string(line_no) + ": arena takes 2 fields");
      arena = {detail::parse_decimal(f[1], line_no), detail::parse_decimal(f[2], line_no)};
      if (!(arena.width > 0 && arena.height > 0))
        throw Error(ErrorCode::configuration, "line " + std::to_string(line_no) + ": arena must be positive");
    } else if (f[0] == "node") {
      if (f.size() != 7) throw Error(ErrorCode::configuration, "line " + std::to_string(line_no) + ": node takes 6 fields");
      NodeState n;
      n.id = detail::parse_id(f[1], line_no);
      n.position = {detail::parse_decimal(f[2], line_no), detail::parse_decimal(f[3], line_no)};
      n.speed = detail::parse_decimal(f[4], line_no);
      n.radio_range = detail::parse_decimal(f[5], line_no);
      n.compromise_prob = detail::parse_decimal(f[6], line_no);
      if (n.speed < 0 || !(n.radio_range > 0) || n.compromise_prob < 0 || n.compromise_prob > 1)
        throw Error(ErrorCode::configuration, "line " + std::to_string(line_no) + ": node field out of range");
      nodes.push_back(n);
    } else {
      throw Error(ErrorCode::configuration, "line " + std::to_string(line_no) + ": unknown record '" + std::string(f[0]) + "'");
    }
  }
  return Topology(std::move(nodes), arena);
}

inline std::string format_topology(const Topology& topo) {
  std::string out = "arena " + detail::format_decimal(topo.arena().width) + " " +
                    detail::format_decimal(topo.arena().height) + "\n";
  for (const auto& n : topo.nodes()) {
    out += "node " + std::to_string(n.id) + " " + detail::format_decimal(n.position.x) + " " +
           detail::format_decimal(n.position.y) + " " + detail::format_decimal(n.speed) + " " +
           detail::format_decimal(n.radio_range) + " " + detail::format_decimal(n.compromise_prob) + "\n";
  }
  return out;
}

}  // namespace sdup
