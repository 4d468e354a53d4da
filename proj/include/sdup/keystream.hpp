#pragma once

#include <array>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "sdup/error.hpp"
#include "sdup/random.hpp"

namespace sdup {

struct SessionKey {
  std::array<std::uint8_t, 16> key{};
  std::uint32_t session_id = 0;

  friend bool operator==(const SessionKey&, const SessionKey&) = default;
};

// Deterministic keystream. NOT a cryptographic cipher: it is a stand-in with a
// fixed, reproducible definition so that every frame in a test run can be
// recomputed by hand.
//
// Seeding (mix64 is the SplitMix64 step: z += 0x9E3779B97F4A7C15, then the
// two multiply/xorshift rounds; k0, k1 are key[0..8) and key[8..16) read
// little-endian):
//
//   s = mix64(nonce); s = mix64(s ^ session_id); s = mix64(s ^ k1); s = mix64(s ^ k0)
//   if s == 0 then s = 0x9E3779B97F4A7C15
//
// Output: xorshift64* (x ^= x >> 12; x ^= x << 25; x ^= x >> 27;
// word = x * 0x2545F4914F6CDD1D), each word emitted as 8 little-endian bytes.
class XorShiftKeystream {
 public:
  XorShiftKeystream(const SessionKey& key, std::uint64_t nonce) noexcept {
    std::uint64_t k0 = 0, k1 = 0;
    for (int i = 7; i >= 0; --i) {
      k0 = (k0 << 8) | key.key[static_cast<std::size_t>(i)];
      k1 = (k1 << 8) | key.key[static_cast<std::size_t>(i + 8)];
    }
    std::uint64_t s = mix64(nonce);
    s = mix64(s ^ key.session_id);
    s = mix64(s ^ k1);
    s = mix64(s ^ k0);
    state_ = s != 0 ? s : 0x9E3779B97F4A7C15ULL;
  }

  std::uint8_t next_byte() noexcept {
    if (avail_ == 0) {
      state_ ^= state_ >> 12;
      state_ ^= state_ << 25;
      state_ ^= state_ >> 27;
      word_ = state_ * 0x2545F4914F6CDD1DULL;
      avail_ = 8;
    }
    const auto b = static_cast<std::uint8_t>(word_ & 0xFF);
    word_ >>= 8;
    --avail_;
    return b;
  }

 private:
  std::uint64_t state_ = 0;
  std::uint64_t word_ = 0;
  int avail_ = 0;
};

// Anything constructible from (key, nonce) that yields bytes can replace the
// default stream.
template <class S>
concept KeystreamSource = std::constructible_from<S, const SessionKey&, std::uint64_t> &&
                          requires(S s) {
                            { s.next_byte() } -> std::same_as<std::uint8_t>;
                          };

template <KeystreamSource Source = XorShiftKeystream>
std::vector<std::uint8_t> derive_keystream(const SessionKey& key, std::uint64_t nonce,
                                           std::size_t length) {
  Source stream(key, nonce);
  std::vector<std::uint8_t> out(length);
  for (auto& b : out) b = stream.next_byte();
  return out;
}

// XOR with the keystream; an involution for a fixed (key, nonce).
template <KeystreamSource Source = XorShiftKeystream>
std::vector<std::uint8_t> xor_transform(std::span<const std::uint8_t> data, const SessionKey& key,
                                        std::uint64_t nonce) {
  Source stream(key, nonce);
  std::vector<std::uint8_t> out(data.begin(), data.end());
  for (auto& b : out) b ^= stream.next_byte();
  return out;
}

// Fisher-Yates over [0, m) driven by the keystream with nonce = m. Each draw
// reads four stream bytes as a little-endian 32-bit word w; for bound b = i+1
// the draw is rejected while w >= 2^32 - (2^32 mod b), otherwise j = w mod b
// and p[i] is swapped with p[j], for i = m-1 down to 1.
// Result: perm[logical slot] = wire position.
template <KeystreamSource Source = XorShiftKeystream>
std::vector<std::uint16_t> derive_permutation(const SessionKey& key, std::size_t m) {
  if (m == 0 || m > 65536) throw Error(ErrorCode::parameter, "permutation size must be in [1, 65536]");
  std::vector<std::uint16_t> perm(m);
  for (std::size_t i = 0; i < m; ++i) perm[i] = static_cast<std::uint16_t>(i);
  Source stream(key, static_cast<std::uint64_t>(m));
  constexpr std::uint64_t kSpan = 1ULL << 32;
  for (std::size_t i = m; i-- > 1;) {
    const std::uint64_t bound = i + 1;
    const std::uint64_t limit = kSpan - kSpan % bound;
    std::uint64_t w = 0;
    do {
      w = 0;
      for (int b = 0; b < 4; ++b) w |= static_cast<std::uint64_t>(stream.next_byte()) << (8 * b);
    } while (w >= limit);
    std::swap(perm[i], perm[static_cast<std::size_t>(w % bound)]);
  }
  return perm;
}

}  // namespace sdup
