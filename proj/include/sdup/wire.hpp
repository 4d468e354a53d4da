#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "sdup/error.hpp"
#include "sdup/frame_codec.hpp"

namespace sdup {

// Frame on the wire: session_id (4 bytes BE) | wire_pos (2 bytes BE) | body.
inline constexpr std::size_t kFrameHeaderSize = 6;

inline Bytes serialize_frame(const Frame& frame) {
  Bytes out;
  out.reserve(kFrameHeaderSize + frame.body.size());
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(frame.session_id >> shift));
  out.push_back(static_cast<std::uint8_t>(frame.wire_pos >> 8));
  out.push_back(static_cast<std::uint8_t>(frame.wire_pos));
  out.insert(out.end(), frame.body.begin(), frame.body.end());
  return out;
}

inline Frame parse_frame(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kFrameHeaderSize) throw Error(ErrorCode::malformed, "frame shorter than its header");
  Frame frame;
  for (std::size_t i = 0; i < 4; ++i) frame.session_id = (frame.session_id << 8) | bytes[i];
  frame.wire_pos = static_cast<std::uint16_t>((bytes[4] << 8) | bytes[5]);
  frame.body.assign(bytes.begin() + kFrameHeaderSize, bytes.end());
  return frame;
}

// Offline container: "SDUP1" | n (1 byte) | k (1 byte) | { length (4 bytes BE) | frame }*
inline constexpr std::string_view kContainerMagic = "SDUP1";

struct FrameContainer {
  std::size_t n = 0;
  std::size_t k = 0;
  std::vector<Frame> frames;
};

inline Bytes write_container(const FrameContainer& c) {
  check_threshold(c.k, c.n);
  Bytes out(kContainerMagic.begin(), kContainerMagic.end());
  out.push_back(static_cast<std::uint8_t>(c.n));
  out.push_back(static_cast<std::uint8_t>(c.k));
  for (const auto& frame : c.frames) {
    const auto wire = serialize_frame(frame);
    const auto len = static_cast<std::uint32_t>(wire.size());
    for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(len >> shift));
    out.insert(out.end(), wire.begin(), wire.end());
  }
  return out;
}

inline FrameContainer read_container(std::span<const std::uint8_t> bytes) {
  const auto header = kContainerMagic.size() + 2;
  if (bytes.size() < header || !std::equal(kContainerMagic.begin(), kContainerMagic.end(), bytes.begin()))
    throw Error(ErrorCode::malformed, "missing SDUP1 magic");
  FrameContainer c;
  c.n = bytes[kContainerMagic.size()];
  c.k = bytes[kContainerMagic.size() + 1];
  check_threshold(c.k, c.n);
  std::size_t pos = header;
  while (pos < bytes.size()) {
    if (bytes.size() - pos < 4) throw Error(ErrorCode::malformed, "truncated frame length");
    std::uint32_t len = 0;
    for (int i = 0; i < 4; ++i) len = (len << 8) | bytes[pos + static_cast<std::size_t>(i)];
    pos += 4;
    if (bytes.size() - pos < len) throw Error(ErrorCode::malformed, "truncated frame");
    c.frames.push_back(parse_frame(bytes.subspan(pos, len)));
    pos += len;
  }
  return c;
}

}  // namespace sdup
