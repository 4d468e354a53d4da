#pragma once

#include <vector>

#include "sdup/topology.hpp"

namespace sdup::testing {

inline NodeState make_node(NodeId id, double x, double y, double range = 150, double p = 0, double speed = 0) {
  NodeState n;
  n.id = id;
  n.position = {x, y};
  n.radio_range = range;
  n.compromise_prob = p;
  n.speed = speed;
  return n;
}

// 0 - 1 - 2
inline Topology line3(double relay_p = 0) {
  return Topology({make_node(0, 0, 0), make_node(1, 100, 0, 150, relay_p), make_node(2, 200, 0)}, {400, 400});
}

// 0 - {1, 2} - 3; 0 and 3 out of range, 1 and 2 out of range.
inline Topology diamond(double relay_p = 0) {
  return Topology({make_node(0, 0, 200), make_node(1, 100, 300, 150, relay_p), make_node(2, 100, 100, 150, relay_p),
                   make_node(3, 200, 200)},
                  {400, 400});
}

// Three node-disjoint routes between 0 and 9: a straight one through relays
// 1-3, an upper arc through 10-15 and its mirror image below through 20-25.
inline Topology three_routes(double p_straight, double p_upper, double p_lower) {
  std::vector<NodeState> nodes{make_node(0, 100, 300), make_node(9, 700, 300)};
  for (NodeId i = 0; i < 3; ++i) nodes.push_back(make_node(1 + i, 100 + 150.0 * (i + 1), 300, 150, p_straight));
  const double arc[6][2] = {{-60, 130}, {40, 240}, {180, 270}, {320, 270}, {460, 240}, {560, 130}};
  for (NodeId i = 0; i < 6; ++i) {
    nodes.push_back(make_node(10 + i, 100 + arc[i][0], 300 + arc[i][1], 150, p_upper));
    nodes.push_back(make_node(20 + i, 100 + arc[i][0], 300 - arc[i][1], 150, p_lower));
  }
  return Topology(std::move(nodes), {800, 700});
}

// Hidden terminals: 0 and 2 cannot hear each other, both reach 1.
inline Topology hidden_pair() {
  return Topology({make_node(0, 0, 0), make_node(1, 100, 0), make_node(2, 200, 0)}, {400, 400});
}

// Exposed senders: every node hears every other.
inline Topology triangle() {
  return Topology({make_node(0, 0, 0), make_node(1, 100, 0), make_node(2, 50, 80)}, {400, 400});
}

}  // namespace sdup::testing
