#pragma once

#include <algorithm>
#include <bit>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <unordered_map>
#include <vector>

#include "sdup/error.hpp"
#include "sdup/frame_codec.hpp"
#include "sdup/net_sim.hpp"
#include "sdup/secroute.hpp"
#include "sdup/session.hpp"

namespace sdup {

struct CapturedFrame {
  std::uint32_t session_id = 0;
  std::uint16_t wire_pos = 0;
  Bytes body;

  friend auto operator<=>(const CapturedFrame&, const CapturedFrame&) = default;
};

struct CaptureLog {
  std::map<NodeId, std::set<CapturedFrame>> by_node;

  bool empty() const noexcept { return by_node.empty(); }

  // Colluding adversary: all compromised nodes pool what they saw. First body
  // per wire position wins.
  std::map<std::uint16_t, Bytes> pooled(std::uint32_t session_id) const {
    std::map<std::uint16_t, Bytes> out;
    for (const auto& [node, frames] : by_node)
      for (const auto& f : frames)
        if (f.session_id == session_id) out.emplace(f.wire_pos, f.body);
    return out;
  }
};

// relay: a node holds what it transmits or receives. overhear: additionally
// everything sent by a neighbor, whether or not it was addressed to it.
enum class CaptureScope : std::uint8_t { relay, overhear };

inline CaptureLog capture_frames(const Trace& trace, const Topology& topo, CaptureScope scope = CaptureScope::overhear,
                                 std::size_t first = 0, std::size_t last = std::numeric_limits<std::size_t>::max()) {
  CaptureLog log;
  std::vector<NodeId> bad;
  for (const auto& n : topo.nodes())
    if (n.compromised) bad.push_back(n.id);
  if (bad.empty()) return log;

  auto take = [&](NodeId who, std::uint64_t uid) {
    auto f = trace.frames.find(uid);
    if (f == trace.frames.end()) return;
    log.by_node[who].insert({f->second.session_id, f->second.wire_pos, f->second.body});
  };
  last = std::min(last, trace.records.size());
  for (std::size_t i = first; i < last; ++i) {
    const auto& r = trace.records[i];
    if (r.kind == TraceKind::tx_start) {
      for (NodeId c : bad) {
        if (c == r.sender) take(c, r.uid);
        else if (scope == CaptureScope::overhear && std::binary_search(r.hearers.begin(), r.hearers.end(), c)) take(c, r.uid);
      }
    } else if (r.kind == TraceKind::deliver && scope == CaptureScope::relay) {
      if (std::binary_search(bad.begin(), bad.end(), r.receiver)) take(r.receiver, r.uid);
    }
  }
  return log;
}

enum class AttackerModel : std::uint8_t { oracle, blind };

inline const char* to_string(AttackerModel m) { return m == AttackerModel::blind ? "BLIND" : "ORACLE"; }

constexpr std::size_t kBlindMaxShares = 6;

// Symbolic body of a logical slot as a GF(2) combination of e_0..e_{n-1}.
inline std::uint32_t symbolic_body(std::size_t slot, std::size_t n) {
  if (slot == kAnchorSlot) return 1u;
  const std::size_t i = slot - 1;
  return (1u << i) ^ (1u << ((i + 1) % n));
}

// Number of shares an attacker knowing every slot identity recovers from the
// slots in `mask` (bit s = logical slot s captured).
inline std::size_t structural_recovery(std::uint32_t mask, std::size_t n) {
  std::optional<std::uint32_t> anchor;
  if (mask & 1u) anchor = symbolic_body(kAnchorSlot, n);
  std::map<std::size_t, std::uint32_t> ring;
  for (std::size_t s = 1; s < slot_count(n); ++s)
    if (mask & (1u << s)) ring.emplace(s - 1, symbolic_body(s, n));
  return recover_ring(anchor, ring, n, [](std::uint32_t a, std::uint32_t b) { return a ^ b; }).size();
}

namespace detail {

// Exhaustive search over injective assignments of the captured bodies to
// logical slots. An assignment is consistent unless it fills every ring slot
// with bodies whose XOR is nonzero (the only structural check available
// without the key). Decoding is unique iff the true assignment recovers at
// least k shares and every consistent assignment that also recovers k shares
// yields the same share map, i.e. the attacker's answer is forced and right.
template <class Body, class XorOp, class IsZero>
bool unique_decoding(const std::vector<Body>& bodies, const std::vector<std::size_t>& true_slot, std::size_t n,
                     std::size_t k, XorOp xor_op, IsZero is_zero) {
  const std::size_t slots = slot_count(n);
  const std::size_t m = bodies.size();
  if (m == 0 || m > slots) return false;

  auto recover = [&](const std::vector<std::size_t>& slot_of_item) {
    std::optional<Body> anchor;
    std::map<std::size_t, Body> ring;
    for (std::size_t i = 0; i < m; ++i) {
      if (slot_of_item[i] == kAnchorSlot) anchor = bodies[i];
      else ring.emplace(slot_of_item[i] - 1, bodies[i]);
    }
    return std::pair{recover_ring(anchor, ring, n, xor_op), ring};
  };

  const auto truth = recover(true_slot).first;
  if (truth.size() < k) return false;

  std::vector<std::size_t> assign(m);
  std::vector<bool> used(slots, false);
  bool ambiguous = false;
  auto visit = [&](auto& self, std::size_t item) -> void {
    if (ambiguous) return;
    if (item == m) {
      auto [shares, ring] = recover(assign);
      if (n >= 2 && ring.size() == n) {
        Body sum = ring.begin()->second;
        for (auto it = std::next(ring.begin()); it != ring.end(); ++it) sum = xor_op(sum, it->second);
        if (!is_zero(sum)) return;
      }
      if (shares.size() >= k && shares != truth) ambiguous = true;
      return;
    }
    for (std::size_t s = 0; s < slots; ++s) {
      if (used[s]) continue;
      used[s] = true;
      assign[item] = s;
      self(self, item + 1);
      used[s] = false;
    }
  };
  visit(visit, 0);
  return !ambiguous;
}

// The attacker may ignore frames: success iff some subset of the captured
// frames decodes uniquely. Extra frames can add ambiguity, so without this
// closure a larger capture could do worse than a smaller one.
template <class Body, class XorOp, class IsZero>
bool blind_search(const std::vector<Body>& bodies, const std::vector<std::size_t>& true_slot, std::size_t n,
                  std::size_t k, XorOp xor_op, IsZero is_zero) {
  const std::size_t m = bodies.size();
  if (m == 0 || m > slot_count(n)) return false;
  for (std::uint32_t sub = (1u << m) - 1; sub > 0; --sub) {
    if (static_cast<std::size_t>(std::popcount(sub)) < std::min(k, m)) continue;
    std::vector<Body> b;
    std::vector<std::size_t> t;
    for (std::size_t i = 0; i < m; ++i) {
      if (!(sub & (1u << i))) continue;
      b.push_back(bodies[i]);
      t.push_back(true_slot[i]);
    }
    if (unique_decoding(b, t, n, k, xor_op, is_zero)) return true;
  }
  return false;
}

inline void check_blind_limit(std::size_t n) {
  if (n > kBlindMaxShares)
    throw Error(ErrorCode::model_limit, "blind attack search is limited to n <= " + std::to_string(kBlindMaxShares));
}

}  // namespace detail

// Blind attack over symbolic bodies: the captured slots are `mask`.
inline bool blind_attack_slots(std::uint32_t mask, std::size_t n, std::size_t k) {
  detail::check_blind_limit(n);
  std::vector<std::uint32_t> bodies;
  std::vector<std::size_t> truth;
  for (std::size_t s = 0; s < slot_count(n); ++s) {
    if (!(mask & (1u << s))) continue;
    bodies.push_back(symbolic_body(s, n));
    truth.push_back(s);
  }
  return detail::blind_search(bodies, truth, n, k, [](std::uint32_t a, std::uint32_t b) { return a ^ b; },
                              [](std::uint32_t v) { return v == 0; });
}

// Granted the permutation and the anchor's identity; success means at least k
// encrypted shares are structurally recoverable.
inline bool oracle_attack(const CaptureLog& log, std::uint32_t session_id, const FrameLayout& layout, std::size_t k) {
  const auto pooled = log.pooled(session_id);
  std::optional<Bytes> anchor;
  std::map<std::size_t, Bytes> ring;
  for (const auto& [pos, body] : pooled) {
    if (pos >= layout.slots()) continue;
    const auto slot = layout.slot_of[pos];
    if (slot == kAnchorSlot) anchor = body;
    else ring.emplace(slot - 1, body);
  }
  return recover_shares(anchor, ring, layout.n).size() >= k;
}

// Frames only. `layout` is used solely to score the attacker's answer.
inline bool blind_attack(const CaptureLog& log, std::uint32_t session_id, const FrameLayout& layout, std::size_t k) {
  detail::check_blind_limit(layout.n);
  std::vector<Bytes> bodies;
  std::vector<std::size_t> truth;
  for (const auto& [pos, body] : log.pooled(session_id)) {
    if (pos >= layout.slots()) continue;
    bodies.push_back(body);
    truth.push_back(layout.slot_of[pos]);
  }
  return detail::blind_search(bodies, truth, layout.n, k, [](const Bytes& a, const Bytes& b) { return xor_bytes(a, b); },
                              [](const Bytes& v) { return std::all_of(v.begin(), v.end(), [](std::uint8_t b) { return b == 0; }); });
}

constexpr std::size_t kMaxEnumeratedNodes = 20;

// Exact probability that the frames crossing compromised intermediates let the
// attacker succeed. A compromised relay captures every slot its path carries.
inline double interception_probability(const std::vector<Path>& used, const Topology& topo, const RedundancyPlan& plan,
                                       AttackerModel attacker, Allocation alloc = Allocation::duplicate) {
  if (used.empty()) throw Error(ErrorCode::parameter, "no paths");
  check_threshold(plan.k, plan.n);
  if (attacker == AttackerModel::blind) detail::check_blind_limit(plan.n);
  if (slot_count(plan.n) > 31) throw Error(ErrorCode::model_limit, "too many slots for the analytic model");

  const auto slots = allocate_slots(plan.n, used.size(), alloc);
  std::map<NodeId, std::uint32_t> seen;  // intermediate -> slot mask
  for (std::size_t p = 0; p < used.size(); ++p) {
    std::uint32_t mask = 0;
    for (auto s : slots[p]) mask |= 1u << s;
    for (std::size_t i = 1; i + 1 < used[p].size(); ++i) seen[used[p][i]] |= mask;
  }
  if (seen.size() > kMaxEnumeratedNodes)
    throw Error(ErrorCode::model_limit, std::to_string(seen.size()) + " intermediates exceed the enumeration bound");

  std::vector<std::pair<double, std::uint32_t>> nodes;
  for (const auto& [id, mask] : seen) nodes.emplace_back(topo.node(id).compromise_prob, mask);

  std::unordered_map<std::uint32_t, bool> verdict;
  auto succeeds = [&](std::uint32_t mask) {
    auto it = verdict.find(mask);
    if (it != verdict.end()) return it->second;
    const bool ok = attacker == AttackerModel::oracle ? structural_recovery(mask, plan.n) >= plan.k
                                                      : blind_attack_slots(mask, plan.n, plan.k);
    return verdict[mask] = ok;
  };

  double total = 0;
  for (std::uint32_t outcome = 0; outcome < (1u << nodes.size()); ++outcome) {
    double weight = 1;
    std::uint32_t mask = 0;
    for (std::size_t i = 0; i < nodes.size() && weight > 0; ++i) {
      if (outcome & (1u << i)) {
        weight *= nodes[i].first;
        mask |= nodes[i].second;
      } else {
        weight *= 1 - nodes[i].first;
      }
    }
    if (weight > 0 && succeeds(mask)) total += weight;
  }
  return total;
}

}  // namespace sdup
