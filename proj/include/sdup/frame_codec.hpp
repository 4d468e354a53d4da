#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sdup/error.hpp"
#include "sdup/keystream.hpp"
#include "sdup/shamir.hpp"

namespace sdup {

struct EncryptedShare {
  std::size_t index = 0;  // logical ring position in [0, n)
  Bytes bytes;            // encrypt(x || payload)
};

// One unit on the wire. The header carries only the session and the shuffled
// position; whether the body is the anchor or a ring combination is hidden.
struct Frame {
  std::uint32_t session_id = 0;
  std::uint16_t wire_pos = 0;
  Bytes body;

  friend bool operator==(const Frame&, const Frame&) = default;
};

// Logical slots of a session: slot 0 is the anchor e_0, slot i+1 carries the
// ring frame f_i = e_i ^ e_{(i+1) mod n}. With n = 1 only the anchor exists.
constexpr std::size_t slot_count(std::size_t n) noexcept { return n == 1 ? 1 : n + 1; }
constexpr std::size_t kAnchorSlot = 0;
constexpr std::size_t ring_slot(std::size_t ring_index) noexcept { return ring_index + 1; }

struct FrameLayout {
  std::size_t n = 0;
  std::vector<std::uint16_t> wire_of;  // logical slot -> wire position
  std::vector<std::uint16_t> slot_of;  // wire position -> logical slot

  std::size_t slots() const noexcept { return wire_of.size(); }
};

template <KeystreamSource Source = XorShiftKeystream>
FrameLayout make_layout(const SessionKey& key, std::size_t n) {
  if (n == 0 || n > 255) throw Error(ErrorCode::parameter, "share count must be in [1, 255]");
  FrameLayout layout;
  layout.n = n;
  layout.wire_of = derive_permutation<Source>(key, slot_count(n));
  layout.slot_of.resize(layout.wire_of.size());
  for (std::size_t slot = 0; slot < layout.wire_of.size(); ++slot) layout.slot_of[layout.wire_of[slot]] = static_cast<std::uint16_t>(slot);
  return layout;
}

inline Bytes xor_bytes(const Bytes& a, const Bytes& b) {
  Bytes out(a);
  for (std::size_t i = 0; i < out.size() && i < b.size(); ++i) out[i] ^= b[i];
  return out;
}

struct RingBodies {
  Bytes anchor;
  std::vector<Bytes> ring;  // ring[i] = e_i ^ e_{(i+1) mod n}; empty for n = 1
};

// `encrypted` must be ordered by index.
inline RingBodies ring_combine(std::span<const EncryptedShare> encrypted) {
  if (encrypted.empty()) throw Error(ErrorCode::parameter, "ring needs at least one share");
  const auto len = encrypted.front().bytes.size();
  for (std::size_t i = 0; i < encrypted.size(); ++i) {
    if (encrypted[i].bytes.size() != len) throw Error(ErrorCode::malformed, "encrypted share lengths differ");
    if (encrypted[i].index != i) throw Error(ErrorCode::malformed, "encrypted shares must be ordered by index");
  }
  RingBodies out{encrypted.front().bytes, {}};
  const auto n = encrypted.size();
  if (n == 1) return out;
  out.ring.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.ring.push_back(xor_bytes(encrypted[i].bytes, encrypted[(i + 1) % n].bytes));
  return out;
}

// Walks the ring outward from e_0 in both directions across present ring
// frames. Generic over the body type so the adversary model can run the same
// walk over symbolic bodies.
template <class Body, class XorOp>
std::map<std::size_t, Body> recover_ring(const std::optional<Body>& anchor,
                                         const std::map<std::size_t, Body>& ring, std::size_t n,
                                         XorOp xor_op) {
  std::map<std::size_t, Body> known;
  if (!anchor || n == 0) return known;
  known.emplace(0, *anchor);
  if (n == 1) return known;

  // clockwise: e_{i+1} = f_i ^ e_i
  std::size_t i = 0;
  for (; i + 1 < n; ++i) {
    auto f = ring.find(i);
    if (f == ring.end()) break;
    known.emplace(i + 1, xor_op(f->second, known.at(i)));
  }
  // counterclockwise: e_j = f_j ^ e_{(j+1) mod n}
  for (std::size_t j = n - 1; j >= 1 && !known.contains(j); --j) {
    auto f = ring.find(j);
    if (f == ring.end()) break;
    known.emplace(j, xor_op(f->second, known.at((j + 1) % n)));
  }
  return known;
}

inline std::map<std::size_t, Bytes> recover_shares(const std::optional<Bytes>& anchor,
                                                   const std::map<std::size_t, Bytes>& ring,
                                                   std::size_t n) {
  return recover_ring(anchor, ring, n, [](const Bytes& a, const Bytes& b) { return xor_bytes(a, b); });
}

inline Bytes serialize_share(const Share& share) {
  Bytes out;
  out.reserve(share.payload.size() + 1);
  out.push_back(share.x.value());
  out.insert(out.end(), share.payload.begin(), share.payload.end());
  return out;
}

inline Share deserialize_share(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2) throw Error(ErrorCode::malformed, "serialized share too short");
  return Share{FieldByte(bytes[0]), Bytes(bytes.begin() + 1, bytes.end())};
}

struct PlannedFrame {
  std::size_t slot = 0;  // logical slot; known only to the endpoints
  Frame frame;
};

// Same pipeline as encode_frames, but keeps the logical slot of every frame so
// a sender can decide which path carries which frame. Output is in wire order.
template <KeystreamSource Source = XorShiftKeystream>
std::vector<PlannedFrame> plan_frames(const ShareSet& shares, const SessionKey& key) {
  check_threshold(shares.k, shares.n);
  if (shares.shares.size() != shares.n) throw Error(ErrorCode::malformed, "share set size differs from n");

  std::vector<EncryptedShare> encrypted;
  encrypted.reserve(shares.n);
  for (std::size_t i = 0; i < shares.n; ++i)
    encrypted.push_back({i, xor_transform<Source>(serialize_share(shares.shares[i]), key, i)});
  auto bodies = ring_combine(encrypted);

  const auto layout = make_layout<Source>(key, shares.n);
  std::vector<PlannedFrame> out;
  out.reserve(layout.slots());
  out.push_back({kAnchorSlot, {key.session_id, layout.wire_of[kAnchorSlot], std::move(bodies.anchor)}});
  for (std::size_t i = 0; i < bodies.ring.size(); ++i)
    out.push_back({ring_slot(i), {key.session_id, layout.wire_of[ring_slot(i)], std::move(bodies.ring[i])}});
  std::sort(out.begin(), out.end(),
            [](const PlannedFrame& a, const PlannedFrame& b) { return a.frame.wire_pos < b.frame.wire_pos; });
  return out;
}

template <KeystreamSource Source = XorShiftKeystream>
std::vector<Frame> encode_frames(const ShareSet& shares, const SessionKey& key) {
  std::vector<Frame> out;
  for (auto& planned : plan_frames<Source>(shares, key)) out.push_back(std::move(planned.frame));
  return out;
}

// Inverts encode_frames over any received subset. Duplicate wire positions
// keep the first occurrence; arrival order is irrelevant.
template <KeystreamSource Source = XorShiftKeystream>
Bytes decode_frames(std::span<const Frame> frames, const SessionKey& key, std::size_t n, std::size_t k) {
  check_threshold(k, n);
  for (const auto& f : frames) {
    if (f.session_id != key.session_id)
      throw Error(ErrorCode::session_mismatch, "frame session " + std::to_string(f.session_id) +
                                                   " vs key session " + std::to_string(key.session_id));
  }
  const auto layout = make_layout<Source>(key, n);

  std::optional<Bytes> anchor;
  std::map<std::size_t, Bytes> ring;
  std::vector<bool> seen(layout.slots(), false);
  std::optional<std::size_t> body_len;
  for (const auto& f : frames) {
    if (f.wire_pos >= layout.slots())
      throw Error(ErrorCode::malformed, "wire position " + std::to_string(f.wire_pos) + " out of range");
    if (seen[f.wire_pos]) continue;
    seen[f.wire_pos] = true;
    if (body_len && *body_len != f.body.size()) throw Error(ErrorCode::malformed, "frame body lengths differ");
    body_len = f.body.size();
    const std::size_t slot = layout.slot_of[f.wire_pos];
    if (slot == kAnchorSlot) anchor = f.body;
    else ring.emplace(slot - 1, f.body);
  }
  if (!anchor) throw Error(ErrorCode::insufficient_shares, "anchor frame missing");

  const auto recovered = recover_shares(anchor, ring, n);
  if (recovered.size() < k)
    throw Error(ErrorCode::insufficient_shares, "recovered " + std::to_string(recovered.size()) +
                                                    " shares, need " + std::to_string(k));
  std::vector<Share> plain;
  plain.reserve(recovered.size());
  for (const auto& [index, body] : recovered)
    plain.push_back(deserialize_share(xor_transform<Source>(body, key, index)));
  return reconstruct(plain, k);
}

}  // namespace sdup
