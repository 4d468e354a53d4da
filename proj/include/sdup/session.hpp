#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "sdup/error.hpp"
#include "sdup/frame_codec.hpp"
#include "sdup/net_sim.hpp"
#include "sdup/secroute.hpp"
#include "sdup/shamir.hpp"
#include "sdup/wire.hpp"

namespace sdup {

// How frames are spread over the session's paths. `duplicate` sends the full
// stream on every path; `spread` sends logical slot j only on path j mod P.
enum class Allocation : std::uint8_t { duplicate, spread };

inline const char* to_string(Allocation a) { return a == Allocation::spread ? "spread" : "duplicate"; }

struct SessionConfig {
  SessionKey key;
  std::size_t k = 1;
  std::size_t n = 1;
  Path primary;
  std::vector<Path> duplicates;
  Allocation allocation = Allocation::duplicate;
  std::optional<double> timeout;  // seconds; default from receiver_timeout()

  std::vector<Path> paths() const {
    std::vector<Path> out{primary};
    out.insert(out.end(), duplicates.begin(), duplicates.end());
    return out;
  }

  void validate() const {
    check_threshold(k, n);
    if (primary.size() < 2) throw Error(ErrorCode::parameter, "primary path needs at least two nodes");
    for (const auto& p : duplicates) {
      if (p.size() < 2 || p.front() != primary.front() || p.back() != primary.back())
        throw Error(ErrorCode::parameter, "duplicate path must share the primary's endpoints");
    }
    if (timeout && !(*timeout > 0)) throw Error(ErrorCode::parameter, "timeout must be > 0");
  }

  // 2 x (hops summed over every path used) x airtime x (n + 1).
  double receiver_timeout(const ChannelParams& channel) const {
    if (timeout) return *timeout;
    std::size_t hops = 0;
    for (const auto& p : paths()) hops += p.size() - 1;
    return 2.0 * static_cast<double>(hops) * channel.frame_airtime * static_cast<double>(n + 1);
  }
};

// Logical slots carried by each of `path_count` paths.
inline std::vector<std::vector<std::size_t>> allocate_slots(std::size_t n, std::size_t path_count, Allocation alloc) {
  if (path_count == 0) throw Error(ErrorCode::parameter, "no paths");
  std::vector<std::vector<std::size_t>> out(path_count);
  for (std::size_t slot = 0; slot < slot_count(n); ++slot) {
    if (alloc == Allocation::spread) {
      out[slot % path_count].push_back(slot);
    } else {
      for (auto& v : out) v.push_back(slot);
    }
  }
  return out;
}

struct PathQueue {
  Path path;
  std::vector<PlannedFrame> frames;  // wire order
};

// Splits and encodes once; every path gets its share of the same wire-ordered stream.
template <class Rng, KeystreamSource Source = XorShiftKeystream>
std::vector<PathQueue> sender_encode(std::span<const std::uint8_t> message, const SessionConfig& session, Rng& rng) {
  if (message.empty()) throw Error(ErrorCode::parameter, "empty message");
  session.validate();
  const auto shares = split(message, session.k, session.n, rng);
  const auto planned = plan_frames<Source>(shares, session.key);
  const auto paths = session.paths();
  const auto slots = allocate_slots(session.n, paths.size(), session.allocation);

  std::vector<PathQueue> out;
  for (std::size_t p = 0; p < paths.size(); ++p) {
    PathQueue q{paths[p], {}};
    for (const auto& f : planned) {
      if (std::find(slots[p].begin(), slots[p].end(), f.slot) != slots[p].end()) q.frames.push_back(f);
    }
    out.push_back(std::move(q));
  }
  return out;
}

enum class SenderPhase : std::uint8_t { idle, sensing, transmitting, done, failed };
enum class ReceiverPhase : std::uint8_t { collecting, decoded, timed_out };

inline const char* to_string(SenderPhase p) {
  switch (p) {
    case SenderPhase::idle: return "IDLE";
    case SenderPhase::sensing: return "SENSING";
    case SenderPhase::transmitting: return "TRANSMITTING";
    case SenderPhase::done: return "DONE";
    case SenderPhase::failed: return "FAILED";
  }
  return "?";
}

inline const char* to_string(ReceiverPhase p) {
  switch (p) {
    case ReceiverPhase::collecting: return "COLLECTING";
    case ReceiverPhase::decoded: return "DECODED";
    case ReceiverPhase::timed_out: return "TIMED_OUT";
  }
  return "?";
}

struct SenderState {
  SenderPhase phase = SenderPhase::idle;
  std::vector<PathQueue> queues;
  std::size_t current = 0;      // queue being sent
  std::size_t outstanding = 0;  // frames of `current` not yet arrived or dropped
  std::size_t source_sends = 0;
  std::map<std::uint64_t, std::uint32_t> backoffs;  // packet uid -> busy senses at the source
};

struct ReceiverState {
  ReceiverPhase phase = ReceiverPhase::collecting;
  std::map<std::uint16_t, Frame> frames;  // first arrival per wire position
  double deadline = 0;
  std::optional<Bytes> message;
  std::optional<double> decoded_at;
};

// Returns true if the frame was new.
inline bool receiver_accept(ReceiverState& state, const Frame& frame) {
  return state.frames.emplace(frame.wire_pos, frame).second;
}

template <KeystreamSource Source = XorShiftKeystream>
std::optional<Bytes> receiver_decode_attempt(ReceiverState& state, const SessionConfig& session) {
  if (state.phase != ReceiverPhase::collecting) throw Error(ErrorCode::parameter, "receiver is not collecting");
  std::vector<Frame> held;
  held.reserve(state.frames.size());
  for (const auto& [pos, f] : state.frames) held.push_back(f);
  try {
    state.message = decode_frames<Source>(held, session.key, session.n, session.k);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::insufficient_shares) throw;
    return std::nullopt;
  }
  state.phase = ReceiverPhase::decoded;
  return state.message;
}

// Final attempt at the deadline; anything short of a decode is a timeout.
template <KeystreamSource Source = XorShiftKeystream>
void receiver_deadline(ReceiverState& state, const SessionConfig& session) {
  if (state.phase != ReceiverPhase::collecting) return;
  if (!receiver_decode_attempt<Source>(state, session)) state.phase = ReceiverPhase::timed_out;
}

struct SessionOutcome {
  bool delivered = false;
  std::optional<Bytes> message;
  std::optional<ErrorCode> failure;
  SenderPhase sender_phase = SenderPhase::idle;
  ReceiverPhase receiver_phase = ReceiverPhase::collecting;
  std::size_t frames_sent = 0;  // injected by the source, all paths
  std::size_t bytes_sent = 0;   // wire bytes of those frames
  double start = 0;
  double end = 0;
  std::optional<double> decoded_at;
  std::size_t first_record = 0;  // [first_record, end_record) of sim.trace().records
  std::size_t end_record = 0;
  std::map<std::uint64_t, std::uint32_t> backoffs;
};

inline std::uint64_t packet_uid(std::uint32_t session_id, std::size_t path, std::size_t frame) {
  return (static_cast<std::uint64_t>(session_id) << 32) | (static_cast<std::uint64_t>(path) << 16) | (frame + 1);
}

// Spacing between consecutive injections on one path: long enough for a frame
// to clear every hop before the next one starts, so a path never contends
// with itself.
inline double injection_interval(const Path& path, const ChannelParams& channel) {
  return static_cast<double>(path.size() - 1) * channel.frame_airtime +
         static_cast<double>(channel.contention_window) * channel.backoff_slot;
}

// Runs one session to completion on `sim`. Paths are sent one after another:
// queue p+1 starts once every frame of queue p has arrived or been dropped.
// No acknowledgements, no retransmission, no route repair.
template <class Rng, KeystreamSource Source = XorShiftKeystream>
SessionOutcome run_session(Simulator& sim, const SessionConfig& session, std::span<const std::uint8_t> message, Rng& rng) {
  session.validate();
  for (const auto& path : session.paths()) {
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
      if (!sim.topology().contains(path[i]) || !sim.topology().contains(path[i + 1]) ||
          !sim.topology().linked(path[i], path[i + 1]))
        throw Error(ErrorCode::routing, "path hop " + std::to_string(path[i]) + "->" + std::to_string(path[i + 1]) +
                                            " is not a link");
    }
  }

  const NodeId source = session.primary.front(), sink = session.primary.back();
  const std::uint32_t sid = session.key.session_id;
  SessionOutcome out;
  out.start = sim.now();
  out.first_record = sim.trace().records.size();

  SenderState tx;
  tx.queues = sender_encode<Rng, Source>(message, session, rng);
  ReceiverState rx;
  rx.deadline = out.start + session.receiver_timeout(sim.channel());

  auto ours = [&](std::uint64_t uid) { return (uid >> 32) == sid && uid != 0; };
  auto start_queue = [&](std::size_t p) {
    tx.current = p;
    tx.outstanding = tx.queues[p].frames.size();
    tx.phase = SenderPhase::sensing;
    const double gap = injection_interval(tx.queues[p].path, sim.channel());
    double t = sim.now();
    for (std::size_t i = 0; i < tx.queues[p].frames.size(); ++i, t += gap) {
      Packet pkt{packet_uid(sid, p, i), tx.queues[p].frames[i].frame, tx.queues[p].path, 0};
      out.bytes_sent += kFrameHeaderSize + pkt.frame.body.size();
      ++out.frames_sent;
      sim.inject(std::move(pkt), t);
    }
  };
  auto start_from = [&](std::size_t p) {
    while (p < tx.queues.size() && tx.queues[p].frames.empty()) ++p;
    if (p < tx.queues.size()) start_queue(p);
    else tx.phase = tx.source_sends > 0 ? SenderPhase::done : SenderPhase::failed;
  };
  auto resolved = [&]() {
    if (--tx.outstanding == 0) start_from(tx.current + 1);
  };

  sim.on_record([&](const TraceRecord& r) {
    if (!ours(r.uid) || r.sender != source) return;
    if (r.kind == TraceKind::tx_start) {
      ++tx.source_sends;
      if (tx.phase == SenderPhase::sensing) tx.phase = SenderPhase::transmitting;
    } else if (r.kind == TraceKind::sense_busy) {
      ++tx.backoffs[r.uid];
    }
  });
  sim.on_drop([&](const Packet& p, double, TraceKind) {
    if (ours(p.uid)) resolved();
  });
  sim.on_arrival([&](const Packet& p, double t) {
    if (!ours(p.uid)) return;
    if (p.route.back() == sink && t <= rx.deadline && rx.phase == ReceiverPhase::collecting &&
        receiver_accept(rx, p.frame) && rx.frames.size() >= session.k) {
      if (receiver_decode_attempt<Source>(rx, session)) rx.decoded_at = t;
    }
    resolved();
  });

  start_from(0);
  // Frames always resolve (delivered or dropped), so the run ends on its own.
  sim.run_until(out.start + 1e9, true);
  receiver_deadline<Source>(rx, session);
  sim.on_record(nullptr);
  sim.on_drop(nullptr);
  sim.on_arrival(nullptr);

  out.delivered = rx.phase == ReceiverPhase::decoded;
  out.message = rx.message;
  out.decoded_at = rx.decoded_at;
  if (!out.delivered) out.failure = ErrorCode::insufficient_shares;
  out.sender_phase = tx.phase;
  out.receiver_phase = rx.phase;
  out.end = sim.now();
  out.end_record = sim.trace().records.size();
  out.backoffs = std::move(tx.backoffs);
  return out;
}

}  // namespace sdup
