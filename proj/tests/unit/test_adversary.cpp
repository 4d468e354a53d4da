#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "sdup/adversary.hpp"

namespace sdup {
namespace {

SessionKey key_for(std::uint32_t sid) {
  SessionKey key;
  for (std::size_t i = 0; i < key.key.size(); ++i) key.key[i] = static_cast<std::uint8_t>(0xA0 + i + sid);
  key.session_id = sid;
  return key;
}

struct Encoded {
  SessionKey key;
  FrameLayout layout;
  std::vector<Frame> by_slot;  // index = logical slot
};

Encoded encode(std::size_t n, std::uint64_t seed) {
  Encoded e{key_for(static_cast<std::uint32_t>(seed)), {}, {}};
  e.layout = make_layout(e.key, n);
  std::mt19937_64 gen(seed);
  const auto msg = testing::random_bytes(gen, 16);
  SplitMix64 rng(seed);
  const auto frames = encode_frames(split(msg, 1, n, rng), e.key);
  e.by_slot.resize(frames.size());
  for (const auto& f : frames) e.by_slot[e.layout.slot_of[f.wire_pos]] = f;
  return e;
}

CaptureLog log_of(const Encoded& e, std::uint32_t mask, NodeId who = 7) {
  CaptureLog log;
  for (std::size_t s = 0; s < e.by_slot.size(); ++s) {
    if (!(mask & (1u << s))) continue;
    const auto& f = e.by_slot[s];
    log.by_node[who].insert({f.session_id, f.wire_pos, f.body});
  }
  return log;
}

// Independent blind-attacker reference for small n: every subset of the
// captured frames, every full permutation of slot labels, recovery by graph
// search over explicit XOR edges.
std::map<std::size_t, Bytes> bfs_recover(const std::map<std::size_t, Bytes>& by_slot, std::size_t n) {
  std::map<std::size_t, Bytes> known;
  auto a = by_slot.find(0);
  if (a == by_slot.end()) return known;
  known[0] = a->second;
  bool grew = true;
  while (grew && n >= 2) {
    grew = false;
    for (std::size_t i = 0; i < n; ++i) {
      auto f = by_slot.find(i + 1);
      if (f == by_slot.end()) continue;
      const std::size_t u = i, v = (i + 1) % n;
      if (known.contains(u) && !known.contains(v)) {
        known[v] = xor_bytes(f->second, known[u]);
        grew = true;
      } else if (known.contains(v) && !known.contains(u)) {
        known[u] = xor_bytes(f->second, known[v]);
        grew = true;
      }
    }
  }
  return known;
}

bool brute_blind(const std::vector<Bytes>& bodies, const std::vector<std::size_t>& truth_slot, std::size_t n, std::size_t k) {
  const std::size_t slots = slot_count(n), m = bodies.size();
  for (std::uint32_t sub = 1; sub < (1u << m); ++sub) {
    std::vector<std::size_t> items;
    for (std::size_t i = 0; i < m; ++i)
      if (sub & (1u << i)) items.push_back(i);
    std::map<std::size_t, Bytes> t;
    for (auto i : items) t[truth_slot[i]] = bodies[i];
    const auto truth = bfs_recover(t, n);
    if (truth.size() < k) continue;
    std::vector<std::size_t> perm(slots);
    std::iota(perm.begin(), perm.end(), 0);
    bool unique = true;
    do {
      std::map<std::size_t, Bytes> guess;
      for (std::size_t j = 0; j < items.size(); ++j) guess[perm[j]] = bodies[items[j]];
      if (n >= 2) {
        std::size_t ring_filled = 0;
        Bytes sum(bodies[0].size(), 0);
        for (std::size_t s = 1; s < slots; ++s) {
          if (!guess.contains(s)) continue;
          ++ring_filled;
          sum = xor_bytes(sum, guess[s]);
        }
        if (ring_filled == n && std::any_of(sum.begin(), sum.end(), [](auto b) { return b != 0; })) continue;
      }
      const auto got = bfs_recover(guess, n);
      if (got.size() >= k && got != truth) unique = false;
    } while (unique && std::next_permutation(perm.begin(), perm.end()));
    if (unique) return true;
  }
  return false;
}

TEST(CaptureFrames, NoCompromisedNodesEmptyLog) {
  Simulator sim(testing::line3(), {}, 1);
  sim.inject({1, Frame{1, 0, {1, 2}}, {0, 1, 2}, 0}, 0.0);
  sim.run_until(1.0);
  EXPECT_TRUE(capture_frames(sim.trace(), sim.topology()).empty());
}

std::pair<Simulator, SessionOutcome> run_line(Topology topo, std::uint32_t sid, std::size_t n) {
  Simulator sim(std::move(topo), {}, 3);
  SessionConfig s;
  s.key = key_for(sid);
  s.k = 1;
  s.n = n;
  s.primary = {0, 1, 2};
  SplitMix64 rng(3);
  auto out = run_session(sim, s, Bytes{1, 2, 3, 4}, rng);
  return {std::move(sim), out};
}

TEST(CaptureFrames, CompromisedRelaySeesWholeSession) {
  auto topo = testing::line3();
  topo.node(1).compromised = true;
  auto [sim, out] = run_line(topo, 4, 3);
  for (auto scope : {CaptureScope::relay, CaptureScope::overhear}) {
    auto log = capture_frames(sim.trace(), sim.topology(), scope);
    ASSERT_EQ(log.by_node.size(), 1u);
    EXPECT_EQ(log.pooled(4).size(), 4u);
  }
}

TEST(CaptureFrames, BystanderHearsOnlyItsHop) {
  auto nodes = testing::line3().nodes();
  nodes.push_back(testing::make_node(3, -100, 0));
  nodes.back().compromised = true;
  Topology topo(nodes, {400, 400});
  auto [sim, out] = run_line(topo, 6, 4);

  std::set<CapturedFrame> expected;
  const auto& by = sim.topology().node(3);
  for (const auto& r : sim.trace().records) {
    if (r.kind != TraceKind::tx_start) continue;
    const auto& tx = sim.topology().node(r.sender);
    if (distance(tx.position, by.position) <= std::min(tx.radio_range, by.radio_range)) {
      const auto& f = sim.trace().frames.at(r.uid);
      expected.insert({f.session_id, f.wire_pos, f.body});
    }
  }
  auto log = capture_frames(sim.trace(), sim.topology(), CaptureScope::overhear);
  EXPECT_EQ(log.by_node[3], expected);
  EXPECT_EQ(expected.size(), 5u);  // every frame crosses hop 0->1
  EXPECT_TRUE(capture_frames(sim.trace(), sim.topology(), CaptureScope::relay).empty());
}

TEST(CaptureFrames, BystanderNearLastHopOnly) {
  auto nodes = testing::line3().nodes();
  nodes.push_back(testing::make_node(3, 300, 0));  // hears node 2 only; 2 never transmits
  nodes.back().compromised = true;
  Topology topo(nodes, {400, 400});
  auto [sim, out] = run_line(topo, 6, 4);
  EXPECT_TRUE(capture_frames(sim.trace(), sim.topology()).empty());
}

TEST(OracleAttack, Examples) {
  auto e = encode(4, 1);
  EXPECT_TRUE(oracle_attack(log_of(e, 0b11111), e.key.session_id, e.layout, 3));
  EXPECT_FALSE(oracle_attack(log_of(e, 0b11110), e.key.session_id, e.layout, 1));  // no anchor
  EXPECT_FALSE(oracle_attack(log_of(e, 0b00011), e.key.session_id, e.layout, 3));  // anchor + f_0
  EXPECT_TRUE(oracle_attack(log_of(e, 0b00011), e.key.session_id, e.layout, 2));
  EXPECT_FALSE(oracle_attack(log_of(e, 0b11111), e.key.session_id + 1, e.layout, 1));  // other session
}

TEST(OracleAttack, MatchesRingReachabilityExhaustively) {
  for (std::size_t n = 1; n <= 6; ++n) {
    auto e = encode(n, 10 + n);
    for (std::uint32_t mask = 0; mask < (1u << slot_count(n)); ++mask) {
      std::vector<bool> ring(n, false);
      for (std::size_t i = 0; i < n && n > 1; ++i) ring[i] = mask & (1u << (i + 1));
      const auto reach = testing::ring_reachable(mask & 1u, ring, n).size();
      for (std::size_t k = 1; k <= n; ++k) {
        EXPECT_EQ(oracle_attack(log_of(e, mask), e.key.session_id, e.layout, k), reach >= k);
        EXPECT_EQ(structural_recovery(mask, n), reach);
      }
    }
  }
}

TEST(BlindAttack, ZeroFramesFails) {
  auto e = encode(3, 2);
  EXPECT_FALSE(blind_attack(CaptureLog{}, e.key.session_id, e.layout, 1));
}

TEST(BlindAttack, FullCaptureTwoShares) {
  auto e = encode(2, 3);
  std::vector<Bytes> bodies;
  std::vector<std::size_t> slots;
  for (std::size_t s = 0; s < 3; ++s) {
    bodies.push_back(e.by_slot[s].body);
    slots.push_back(s);
  }
  for (std::size_t k = 1; k <= 2; ++k) {
    const bool expect = brute_blind(bodies, slots, 2, k);
    EXPECT_TRUE(expect);  // f_0 == f_1 for n = 2, so the ring order is moot
    EXPECT_EQ(blind_attack(log_of(e, 0b111), e.key.session_id, e.layout, k), expect);
  }
}

TEST(BlindAttack, MatchesBruteForceSmallN) {
  for (std::size_t n = 1; n <= 3; ++n) {
    auto e = encode(n, 20 + n);
    for (std::uint32_t mask = 0; mask < (1u << slot_count(n)); ++mask) {
      std::vector<Bytes> bodies;
      std::vector<std::size_t> slots;
      for (std::size_t s = 0; s < slot_count(n); ++s) {
        if (!(mask & (1u << s))) continue;
        bodies.push_back(e.by_slot[s].body);
        slots.push_back(s);
      }
      for (std::size_t k = 1; k <= n; ++k) {
        const bool expect = !bodies.empty() && brute_blind(bodies, slots, n, k);
        EXPECT_EQ(blind_attack(log_of(e, mask), e.key.session_id, e.layout, k), expect) << n << " " << mask << " " << k;
        EXPECT_EQ(blind_attack_slots(mask, n, k), expect);
      }
    }
  }
}

TEST(BlindAttack, SymbolicAgreesWithBytes) {
  for (std::size_t n = 1; n <= 5; ++n) {
    auto e = encode(n, 40 + n);
    for (std::uint32_t mask = 0; mask < (1u << slot_count(n)); ++mask)
      for (std::size_t k = 1; k <= n; ++k)
        EXPECT_EQ(blind_attack(log_of(e, mask), e.key.session_id, e.layout, k), blind_attack_slots(mask, n, k));
  }
}

TEST(BlindAttack, ImpliesOracle) {
  for (std::size_t n = 1; n <= 5; ++n) {
    auto e = encode(n, 30 + n);
    for (std::uint32_t mask = 0; mask < (1u << slot_count(n)); ++mask)
      for (std::size_t k = 1; k <= n; ++k)
        if (blind_attack(log_of(e, mask), e.key.session_id, e.layout, k)) {
          EXPECT_TRUE(oracle_attack(log_of(e, mask), e.key.session_id, e.layout, k));
        }
  }
}

TEST(BlindAttack, ModelLimit) {
  auto e = encode(7, 1);
  try {
    blind_attack(log_of(e, 1), e.key.session_id, e.layout, 1);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::model_limit);
  }
}

TEST(Attacks, MonotoneInCapture) {
  for (std::size_t n = 1; n <= 5; ++n) {
    const auto slots = slot_count(n);
    for (std::size_t k = 1; k <= n; ++k) {
      for (std::uint32_t mask = 0; mask < (1u << slots); ++mask) {
        for (std::size_t add = 0; add < slots; ++add) {
          const std::uint32_t bigger = mask | (1u << add);
          if (structural_recovery(mask, n) >= k) {
            EXPECT_GE(structural_recovery(bigger, n), k);
          }
          if (blind_attack_slots(mask, n, k)) {
            EXPECT_TRUE(blind_attack_slots(bigger, n, k)) << n << " " << k << " " << mask;
          }
        }
      }
    }
  }
}

TEST(Interception, ZeroProbabilities) {
  auto topo = testing::three_routes(0, 0, 0);
  auto set = discover_disjoint_paths(topo, 0, 9, 3);
  for (auto m : {AttackerModel::oracle, AttackerModel::blind})
    EXPECT_EQ(interception_probability(set.paths, topo, {3, 4, 2}, m), 0.0);
}

TEST(Interception, SingleRelayIsItsProbability) {
  for (double p : {0.0, 0.1, 0.37, 1.0}) {
    auto topo = testing::line3(p);
    for (RedundancyPlan plan : {RedundancyPlan{1, 1, 0}, RedundancyPlan{3, 3, 0}, RedundancyPlan{3, 4, 0}})
      EXPECT_NEAR(interception_probability({{0, 1, 2}}, topo, plan, AttackerModel::oracle), p, 1e-12);
  }
}

// Hand-derived on the diamond with both relays at 0.2: duplicating gives
// either relay the full stream (1 - 0.8^2); spreading needs both relays.
TEST(Interception, DiamondHandValues) {
  auto topo = testing::diamond(0.2);
  std::vector<Path> both{{0, 1, 3}, {0, 2, 3}};
  EXPECT_NEAR(interception_probability({{0, 1, 3}}, topo, {3, 4, 0}, AttackerModel::oracle), 0.2, 1e-12);
  EXPECT_NEAR(interception_probability(both, topo, {3, 4, 1}, AttackerModel::oracle), 0.36, 1e-12);
  EXPECT_NEAR(interception_probability(both, topo, {3, 4, 1}, AttackerModel::oracle, Allocation::spread), 0.04, 1e-12);
  EXPECT_LE(interception_probability(both, topo, {3, 4, 1}, AttackerModel::blind),
            interception_probability(both, topo, {3, 4, 1}, AttackerModel::oracle));
}

TEST(Interception, EnumerationLimit) {
  std::vector<NodeState> nodes{testing::make_node(0, 0, 0)};
  Path path{0};
  for (NodeId i = 1; i <= 22; ++i) {
    nodes.push_back(testing::make_node(i, 100.0 * i, 0, 150, 0.1));
    path.push_back(i);
  }
  Topology topo(nodes, {3000, 100});
  try {
    interception_probability({path}, topo, {1, 1, 0}, AttackerModel::oracle);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::model_limit);
  }
}

TEST(Interception, SelectedPathIsSafest) {
  const double probs[][3] = {{0.1, 0.05, 0.2}, {0.3, 0.01, 0.02}, {0.0, 0.5, 0.5}, {0.2, 0.2, 0.2}};
  for (const auto& p : probs) {
    auto topo = testing::three_routes(p[0], p[1], p[2]);
    auto set = discover_disjoint_paths(topo, 0, 9, 3);
    ASSERT_EQ(set.paths.size(), 3u);
    const auto best = select_path(set, topo);
    for (auto model : {AttackerModel::oracle, AttackerModel::blind}) {
      for (RedundancyPlan plan : {RedundancyPlan{3, 3, 0}, RedundancyPlan{2, 3, 0}}) {
        const double chosen = interception_probability({best}, topo, plan, model);
        for (const auto& other : set.paths) EXPECT_LE(chosen, interception_probability({other}, topo, plan, model) + 1e-15);
      }
    }
  }
}

}  // namespace
}  // namespace sdup
