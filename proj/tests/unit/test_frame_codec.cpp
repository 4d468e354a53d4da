#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "oracles.hpp"
#include "sdup/frame_codec.hpp"
#include "sdup/random.hpp"
#include "sdup/wire.hpp"

namespace sdup {
namespace {

SessionKey random_key(std::mt19937_64& gen) {
  SessionKey k;
  for (auto& b : k.key) b = static_cast<std::uint8_t>(gen());
  k.session_id = static_cast<std::uint32_t>(gen());
  return k;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::io;
}

std::vector<Frame> without_slot(std::vector<Frame> frames, const FrameLayout& layout, std::size_t slot) {
  std::erase_if(frames, [&](const Frame& f) { return layout.slot_of[f.wire_pos] == slot; });
  return frames;
}

TEST(RingCombine, DegenerateAndPairs) {
  std::vector<EncryptedShare> one{{0, {0xAB}}};
  auto r1 = ring_combine(one);
  EXPECT_EQ(r1.anchor, Bytes{0xAB});
  EXPECT_TRUE(r1.ring.empty());

  std::vector<EncryptedShare> two{{0, {0xAA}}, {1, {0x0F}}};
  auto r2 = ring_combine(two);
  EXPECT_EQ(r2.anchor, Bytes{0xAA});
  EXPECT_EQ(r2.ring, (std::vector<Bytes>{{0xA5}, {0xA5}}));

  std::vector<EncryptedShare> ragged{{0, {1, 2}}, {1, {3}}};
  EXPECT_EQ(code_of([&] { ring_combine(ragged); }), ErrorCode::malformed);
}

TEST(RingCombine, RingTelescopesToZero) {
  std::mt19937_64 gen(5);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 2 + gen() % 7;
    const std::size_t len = 1 + gen() % 20;
    std::vector<EncryptedShare> e;
    for (std::size_t i = 0; i < n; ++i) e.push_back({i, testing::random_bytes(gen, len)});
    auto r = ring_combine(e);
    Bytes acc(len, 0);
    for (const auto& f : r.ring) acc = xor_bytes(acc, f);
    ASSERT_EQ(acc, Bytes(len, 0));
  }
}

struct RingFixture {
  std::vector<Bytes> e;
  RingBodies bodies;
};

RingFixture make_ring(std::mt19937_64& gen, std::size_t n) {
  RingFixture fx;
  std::vector<EncryptedShare> enc;
  for (std::size_t i = 0; i < n; ++i) {
    fx.e.push_back(testing::random_bytes(gen, 8));
    enc.push_back({i, fx.e.back()});
  }
  fx.bodies = ring_combine(enc);
  return fx;
}

TEST(RecoverShares, Examples) {
  std::mt19937_64 gen(6);
  auto fx = make_ring(gen, 4);
  std::map<std::size_t, Bytes> all;
  for (std::size_t i = 0; i < 4; ++i) all[i] = fx.bodies.ring[i];
  auto full = recover_shares(fx.bodies.anchor, all, 4);
  ASSERT_EQ(full.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(full[i], fx.e[i]);

  auto one_step = recover_shares(fx.bodies.anchor, {{0, fx.bodies.ring[0]}}, 4);
  ASSERT_EQ(one_step.size(), 2u);
  EXPECT_EQ(one_step[1], fx.e[1]);

  auto gap = recover_shares(fx.bodies.anchor,
                            {{0, fx.bodies.ring[0]}, {2, fx.bodies.ring[2]}, {3, fx.bodies.ring[3]}}, 4);
  ASSERT_EQ(gap.size(), 4u);
  EXPECT_EQ(gap[3], xor_bytes(fx.bodies.ring[3], fx.e[0]));
  EXPECT_EQ(gap[2], xor_bytes(fx.bodies.ring[2], gap[3]));
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(gap[i], fx.e[i]);

  EXPECT_TRUE(recover_shares(std::nullopt, all, 4).empty());
}

TEST(RecoverShares, MatchesReachabilityOracleExhaustively) {
  std::mt19937_64 gen(7);
  for (std::size_t n = 1; n <= 6; ++n) {
    auto fx = make_ring(gen, n);
    const std::size_t ring_frames = n == 1 ? 0 : n;
    for (std::uint32_t mask = 0; mask < (1u << (ring_frames + 1)); ++mask) {
      const bool anchor = mask & 1;
      std::vector<bool> present(n, false);
      std::map<std::size_t, Bytes> ring;
      for (std::size_t i = 0; i < ring_frames; ++i) {
        present[i] = (mask >> (i + 1)) & 1;
        if (present[i]) ring[i] = fx.bodies.ring[i];
      }
      auto got = recover_shares(anchor ? std::optional<Bytes>(fx.bodies.anchor) : std::nullopt, ring, n);
      auto want = testing::ring_reachable(anchor, present, n);
      ASSERT_EQ(got.size(), want.size()) << "n=" << n << " mask=" << mask;
      for (auto idx : want) {
        ASSERT_TRUE(got.contains(idx));
        ASSERT_EQ(got[idx], fx.e[idx]);
      }
    }
  }
}

TEST(RecoverShares, LossMonotone) {
  std::mt19937_64 gen(8);
  for (std::size_t n = 2; n <= 6; ++n) {
    auto fx = make_ring(gen, n);
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
      std::map<std::size_t, Bytes> ring;
      for (std::size_t i = 0; i < n; ++i)
        if ((mask >> i) & 1) ring[i] = fx.bodies.ring[i];
      const auto base = recover_shares(fx.bodies.anchor, ring, n).size();
      for (std::size_t extra = 0; extra < n; ++extra) {
        auto bigger = ring;
        bigger[extra] = fx.bodies.ring[extra];
        ASSERT_GE(recover_shares(fx.bodies.anchor, bigger, n).size(), base);
      }
    }
  }
}

TEST(Codec, SingleShareIsOneAnchorFrame) {
  SplitMix64 rng(1);
  std::mt19937_64 gen(9);
  const auto key = random_key(gen);
  auto frames = encode_frames(split(Bytes{0x42}, 1, 1, rng), key);
  ASSERT_EQ(frames.size(), 1u);
  EXPECT_EQ(frames[0].wire_pos, 0);
  EXPECT_EQ(frames[0].session_id, key.session_id);
  EXPECT_EQ(decode_frames(frames, key, 1, 1), Bytes{0x42});
}

TEST(Codec, RoundTripRandom) {
  std::mt19937_64 gen(10);
  SplitMix64 rng(10);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 1 + gen() % 16;
    const std::size_t k = 1 + gen() % n;
    const auto key = random_key(gen);
    const auto m = testing::random_bytes(gen, 1 + gen() % 512);
    auto frames = encode_frames(split(m, k, n, rng), key);
    ASSERT_EQ(frames.size(), slot_count(n));
    for (std::size_t i = 0; i < frames.size(); ++i) {
      ASSERT_EQ(frames[i].wire_pos, i);
      ASSERT_EQ(frames[i].body.size(), m.size() + 1);
    }
    ASSERT_EQ(decode_frames(frames, key, n, k), m);
  }
}

TEST(Codec, ArrivalOrderIrrelevantAndDuplicatesIdempotent) {
  std::mt19937_64 gen(11);
  SplitMix64 rng(11);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 2 + gen() % 7;
    const std::size_t k = 1 + gen() % n;
    const auto key = random_key(gen);
    const auto m = testing::random_bytes(gen, 1 + gen() % 64);
    auto frames = encode_frames(split(m, k, n, rng), key);
    std::shuffle(frames.begin(), frames.end(), gen);
    frames.push_back(frames[gen() % frames.size()]);
    ASSERT_EQ(decode_frames(frames, key, n, k), m);
  }
}

TEST(Codec, LossCases) {
  std::mt19937_64 gen(12);
  SplitMix64 rng(12);
  const auto key = random_key(gen);
  const auto layout = make_layout(key, 4);
  const Bytes m{1, 2, 3, 4, 5, 6, 7};
  auto frames = encode_frames(split(m, 3, 4, rng), key);

  auto no_anchor = without_slot(frames, layout, kAnchorSlot);
  EXPECT_EQ(code_of([&] { decode_frames(no_anchor, key, 4, 3); }), ErrorCode::insufficient_shares);

  // f_1 lost: ring still connected from e_0 both ways
  EXPECT_EQ(decode_frames(without_slot(frames, layout, ring_slot(1)), key, 4, 3), m);

  // f_0 and f_1 lost: e_3 via f_3, e_2 via f_2 -> 3 shares
  auto two_lost = without_slot(without_slot(frames, layout, ring_slot(0)), layout, ring_slot(1));
  EXPECT_EQ(decode_frames(two_lost, key, 4, 3), m);

  // f_0 and f_3 lost: only e_0
  auto cut = without_slot(without_slot(frames, layout, ring_slot(0)), layout, ring_slot(3));
  EXPECT_EQ(code_of([&] { decode_frames(cut, key, 4, 3); }), ErrorCode::insufficient_shares);

  EXPECT_EQ(code_of([&] { decode_frames(std::vector<Frame>{}, key, 4, 3); }), ErrorCode::insufficient_shares);
}

TEST(Codec, SessionMismatch) {
  std::mt19937_64 gen(13);
  SplitMix64 rng(13);
  const auto key = random_key(gen);
  auto frames = encode_frames(split(Bytes{1, 2}, 2, 3, rng), key);
  frames[1].session_id ^= 1;
  EXPECT_EQ(code_of([&] { decode_frames(frames, key, 3, 2); }), ErrorCode::session_mismatch);
}

TEST(Codec, WrongKeyFailsOrMismatches) {
  std::mt19937_64 gen(14);
  SplitMix64 rng(14);
  int bad = 0;
  for (int t = 0; t < 1000; ++t) {
    const auto key = random_key(gen);
    auto wrong = random_key(gen);
    wrong.session_id = key.session_id;
    const auto m = testing::random_bytes(gen, 16);
    auto frames = encode_frames(split(m, 3, 4, rng), key);
    try {
      if (decode_frames(frames, wrong, 4, 3) != m) ++bad;
    } catch (const Error&) {
      ++bad;
    }
  }
  EXPECT_GE(bad, 990);
}

TEST(Codec, HeadersRevealOnlySessionAndPosition) {
  std::mt19937_64 gen(15);
  SplitMix64 rng(15);
  const auto key = random_key(gen);
  auto frames = encode_frames(split(testing::random_bytes(gen, 33), 3, 4, rng), key);
  for (const auto& f : frames) {
    const auto wire = serialize_frame(f);
    EXPECT_EQ(wire.size(), kFrameHeaderSize + 34);
    EXPECT_EQ(parse_frame(wire), f);
  }
}

TEST(Wire, FrameLayoutBitExact) {
  const Frame f{0x01020304, 0x0506, {0xAA, 0xBB}};
  EXPECT_EQ(serialize_frame(f), (Bytes{0x01, 0x02, 0x03, 0x04, 0x05, 0x06, 0xAA, 0xBB}));
  EXPECT_EQ(code_of([&] { parse_frame(Bytes{1, 2, 3}); }), ErrorCode::malformed);
}

TEST(Wire, ContainerBitExactAndRoundTrip) {
  FrameContainer c{2, 1, {{0x0A0B0C0D, 1, {0x11}}, {0x0A0B0C0D, 0, {0x22}}}};
  const Bytes expected{'S', 'D', 'U', 'P', '1', 2, 1,
                       0, 0, 0, 7, 0x0A, 0x0B, 0x0C, 0x0D, 0, 1, 0x11,
                       0, 0, 0, 7, 0x0A, 0x0B, 0x0C, 0x0D, 0, 0, 0x22};
  const auto bytes = write_container(c);
  EXPECT_EQ(bytes, expected);
  auto back = read_container(bytes);
  EXPECT_EQ(back.n, 2u);
  EXPECT_EQ(back.k, 1u);
  EXPECT_EQ(back.frames, c.frames);

  auto truncated = bytes;
  truncated.pop_back();
  EXPECT_EQ(code_of([&] { read_container(truncated); }), ErrorCode::malformed);
  EXPECT_EQ(code_of([&] { read_container(Bytes{'X', 'D', 'U', 'P', '1', 1, 1}); }), ErrorCode::malformed);
}

}  // namespace
}  // namespace sdup
