#pragma once

#include <algorithm>
#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <deque>
#include <functional>
#include <map>
#include <queue>
#include <string>
#include <unordered_map>
#include <vector>

#include "sdup/error.hpp"
#include "sdup/frame_codec.hpp"
#include "sdup/random.hpp"
#include "sdup/topology.hpp"

namespace sdup {

struct ChannelParams {
  double frame_airtime = 1e-3;   // seconds per frame on air
  double loss_prob = 0.0;        // independent per-hop loss
  double backoff_slot = 2e-5;    // seconds
  std::uint32_t max_backoffs = 7;
  std::uint32_t contention_window = 16;  // backoff draws are uniform in [1, window] slots
  bool carrier_sense = true;

  void validate() const {
    if (!(frame_airtime > 0)) throw Error(ErrorCode::configuration, "frame_airtime must be > 0");
    if (!(loss_prob >= 0 && loss_prob <= 1)) throw Error(ErrorCode::configuration, "loss_prob outside [0, 1]");
    if (!(backoff_slot > 0)) throw Error(ErrorCode::configuration, "backoff_slot must be > 0");
    if (contention_window == 0) throw Error(ErrorCode::configuration, "contention_window must be >= 1");
  }
};

// A frame travelling hop by hop along a fixed route.
struct Packet {
  std::uint64_t uid = 0;
  Frame frame;
  std::vector<NodeId> route;  // source .. destination
  std::size_t hop = 0;        // route[hop] currently holds the packet
};

// Queue order: time, then kind, then sender, then insertion sequence.
enum class EventKind : std::uint8_t { transmit_end = 0, deliver = 1, mobility = 2, transmit_start = 3 };

struct MediumEvent {
  EventKind kind = EventKind::transmit_start;
  double time = 0;
  NodeId sender = 0;
  NodeId receiver = 0;
  std::uint64_t uid = 0;  // packet uid; 0 for mobility ticks
  std::uint64_t seq = 0;

  friend bool operator>(const MediumEvent& a, const MediumEvent& b) {
    if (a.time != b.time) return a.time > b.time;
    if (a.kind != b.kind) return a.kind > b.kind;
    if (a.sender != b.sender) return a.sender > b.sender;
    return a.seq > b.seq;
  }
};

enum class TraceKind : std::uint8_t {
  sense_busy,
  sense_idle,
  tx_start,
  tx_end,
  deliver,
  collision,
  loss,
  backoff_exhausted,
  link_broken,
  mobility,
};

inline const char* to_string(TraceKind k) {
  switch (k) {
    case TraceKind::sense_busy: return "sense_busy";
    case TraceKind::sense_idle: return "sense_idle";
    case TraceKind::tx_start: return "tx_start";
    case TraceKind::tx_end: return "tx_end";
    case TraceKind::deliver: return "deliver";
    case TraceKind::collision: return "collision";
    case TraceKind::loss: return "loss";
    case TraceKind::backoff_exhausted: return "backoff_exhausted";
    case TraceKind::link_broken: return "link_broken";
    case TraceKind::mobility: return "mobility";
  }
  return "?";
}

struct TraceRecord {
  double time = 0;
  TraceKind kind = TraceKind::tx_start;
  NodeId sender = 0;
  NodeId receiver = 0;
  std::uint64_t uid = 0;
  std::uint32_t attempt = 0;
  std::vector<NodeId> hearers;  // tx_start only: nodes in range of the sender
};

struct Trace {
  std::vector<TraceRecord> records;
  std::map<std::uint64_t, Frame> frames;  // packet uid -> frame carried

  std::string serialize() const {
    std::string out;
    char buf[160];
    for (const auto& r : records) {
      std::snprintf(buf, sizeof buf, "%.9f %s %" PRIu32 " %" PRIu32 " %" PRIu64 " %" PRIu32, r.time,
                    to_string(r.kind), r.sender, r.receiver, r.uid, r.attempt);
      out += buf;
      for (auto h : r.hearers) out += " " + std::to_string(h);
      out += '\n';
    }
    return out;
  }
};

struct SimCounters {
  std::uint64_t transmissions = 0;  // tx_start records
  std::uint64_t arrivals = 0;       // packets that reached the end of their route
  std::uint64_t collisions = 0;
  std::uint64_t losses = 0;
  std::uint64_t backoff_exhausted = 0;
  std::uint64_t link_broken = 0;
};

// Single-threaded discrete-event model of a shared unit-disk medium. Each node
// owns one FIFO transmit queue and serves its head with sense-then-send. A
// reception fails if any other transmission from a node in range of the
// receiver (or from the receiver itself) overlaps it in time.
//
// Per-transmission randomness (backoff draws, Bernoulli loss) is a hash of
// (seed, packet uid, sender, receiver, attempt), so adding unrelated traffic
// never reshuffles the draws seen by existing frames.
class Simulator {
 public:
  using ArrivalHandler = std::function<void(const Packet&, double)>;
  using DropHandler = std::function<void(const Packet&, double, TraceKind)>;
  using RecordObserver = std::function<void(const TraceRecord&)>;

  Simulator(Topology topology, ChannelParams channel, std::uint64_t seed)
      : topo_(std::move(topology)), channel_(channel), seed_(seed), mobility_rng_(mix64(seed, 0x6D6F62ULL)) {
    channel_.validate();
  }

  const Topology& topology() const noexcept { return topo_; }
  Topology& topology() noexcept { return topo_; }
  const ChannelParams& channel() const noexcept { return channel_; }
  const Trace& trace() const noexcept { return trace_; }
  const SimCounters& counters() const noexcept { return counters_; }
  double now() const noexcept { return now_; }

  void on_arrival(ArrivalHandler h) { on_arrival_ = std::move(h); }
  void on_drop(DropHandler h) { on_drop_ = std::move(h); }
  // Called after every trace record is appended.
  void on_record(RecordObserver h) { on_record_ = std::move(h); }

  // True iff no transmission by this node or by a node in its range is on air at t.
  bool is_medium_idle(NodeId node, double t) const {
    for (const auto& tx : active_) {
      if (!(tx.start <= t && t < tx.end)) continue;
      if (tx.sender == node || topo_.linked(tx.sender, node)) return false;
    }
    return true;
  }

  // Queues `packet` at `sender` for the hop to `receiver`, first attempt at t.
  void transmit(Packet packet, NodeId sender, NodeId receiver, double t) {
    if (!topo_.contains(sender) || !topo_.contains(receiver) || !topo_.linked(sender, receiver))
      throw Error(ErrorCode::routing, "node " + std::to_string(sender) + " is not linked to " + std::to_string(receiver));
    if (t < now_) throw Error(ErrorCode::parameter, "cannot schedule in the past");
    trace_.frames.emplace(packet.uid, packet.frame);
    enqueue(sender, receiver, std::move(packet), t);
  }

  // Sends a packet along its whole route starting at route[0].
  void inject(Packet packet, double t) {
    if (packet.route.size() < 2) throw Error(ErrorCode::routing, "route needs at least two nodes");
    packet.hop = 0;
    const NodeId from = packet.route[0], to = packet.route[1];
    transmit(std::move(packet), from, to, t);
  }

  // Periodic random-waypoint steps every dt seconds, starting at now + dt.
  void enable_mobility(double dt) {
    if (!(dt > 0)) throw Error(ErrorCode::parameter, "mobility step must be > 0");
    mobility_dt_ = dt;
    schedule({EventKind::mobility, now_ + dt, 0, 0, 0, 0});
  }

  // Processes every event with time <= t_end. With stop_when_quiet, also stops
  // as soon as no frame-related event is pending (mobility ticks alone do not
  // keep the run alive).
  void run_until(double t_end, bool stop_when_quiet = false) {
    if (t_end < now_) throw Error(ErrorCode::parameter, "t_end is before the current time");
    while (!queue_.empty() && queue_.top().time <= t_end) {
      if (stop_when_quiet && pending_frame_events_ == 0) break;
      const MediumEvent ev = queue_.top();
      queue_.pop();
      now_ = ev.time;
      if (ev.kind != EventKind::mobility) --pending_frame_events_;
      switch (ev.kind) {
        case EventKind::transmit_start: on_transmit_start(ev); break;
        case EventKind::transmit_end: on_transmit_end(ev); break;
        case EventKind::deliver: on_deliver(ev); break;
        case EventKind::mobility: on_mobility(ev); break;
      }
    }
    if (!stop_when_quiet || pending_frame_events_ > 0) now_ = std::max(now_, t_end);
  }

  bool quiet() const noexcept { return pending_frame_events_ == 0; }

 private:
  struct Pending {
    Packet packet;
    NodeId receiver;
    double ready;  // earliest first attempt
  };
  struct Mac {
    std::deque<Pending> queue;
    bool active = false;  // head of line is being served
    std::uint32_t attempt = 0;
  };
  struct OnAir {
    NodeId sender;
    NodeId receiver;
    std::uint64_t uid;
    double start;
    double end;
  };

  enum : std::uint64_t { kTagBackoff = 1, kTagLoss = 2, kTagPost = 3 };

  std::uint64_t draw(std::uint64_t uid, NodeId sender, NodeId receiver, std::uint64_t attempt, std::uint64_t tag) const {
    return mix64(seed_, uid, sender, receiver, attempt, tag);
  }

  double backoff_delay(std::uint64_t bits) const {
    const auto slots = 1 + bits % channel_.contention_window;
    return static_cast<double>(slots) * channel_.backoff_slot;
  }

  void schedule(MediumEvent ev) {
    ev.seq = next_seq_++;
    if (ev.kind != EventKind::mobility) ++pending_frame_events_;
    queue_.push(ev);
  }

  void record(TraceKind kind, NodeId sender, NodeId receiver, std::uint64_t uid, std::uint32_t attempt,
              std::vector<NodeId> hearers = {}) {
    trace_.records.push_back({now_, kind, sender, receiver, uid, attempt, std::move(hearers)});
    if (on_record_) on_record_(trace_.records.back());
  }

  void enqueue(NodeId node, NodeId receiver, Packet packet, double t) {
    auto& mac = macs_[node];
    mac.queue.push_back({std::move(packet), receiver, t});
    if (!mac.active) {
      mac.active = true;
      mac.attempt = 0;
      const auto& head = mac.queue.front();
      schedule({EventKind::transmit_start, t, node, head.receiver, head.packet.uid, 0});
    }
  }

  void drop(const Packet& p, TraceKind why) {
    if (on_drop_) on_drop_(p, now_, why);
  }

  // Head of line is finished (sent or dropped); serve the next after a post-backoff.
  void advance_queue(NodeId node, std::uint64_t finished_uid) {
    auto& mac = macs_[node];
    const NodeId last_receiver = mac.queue.front().receiver;
    mac.queue.pop_front();
    mac.attempt = 0;
    if (mac.queue.empty()) {
      mac.active = false;
      return;
    }
    const auto& head = mac.queue.front();
    const double at = std::max(head.ready, now_ + backoff_delay(draw(finished_uid, node, last_receiver, 0, kTagPost)));
    schedule({EventKind::transmit_start, at, node, head.receiver, head.packet.uid, 0});
  }

  void on_transmit_start(const MediumEvent& ev) {
    auto& mac = macs_[ev.sender];
    const auto& head = mac.queue.front();
    const NodeId node = ev.sender, receiver = head.receiver;
    const std::uint64_t uid = head.packet.uid;

    if (channel_.carrier_sense) {
      if (!is_medium_idle(node, now_)) {
        record(TraceKind::sense_busy, node, receiver, uid, mac.attempt);
        ++mac.attempt;
        if (mac.attempt > channel_.max_backoffs) {
          record(TraceKind::backoff_exhausted, node, receiver, uid, mac.attempt);
          ++counters_.backoff_exhausted;
          drop(head.packet, TraceKind::backoff_exhausted);
          advance_queue(node, uid);
          return;
        }
        const double at = now_ + backoff_delay(draw(uid, node, receiver, mac.attempt, kTagBackoff));
        schedule({EventKind::transmit_start, at, node, receiver, uid, 0});
        return;
      }
      record(TraceKind::sense_idle, node, receiver, uid, mac.attempt);
    }

    if (!topo_.contains(receiver) || !topo_.linked(node, receiver)) {
      record(TraceKind::link_broken, node, receiver, uid, mac.attempt);
      ++counters_.link_broken;
      drop(head.packet, TraceKind::link_broken);
      advance_queue(node, uid);
      return;
    }

    record(TraceKind::tx_start, node, receiver, uid, mac.attempt, topo_.neighbors(node));
    ++counters_.transmissions;
    active_.push_back({node, receiver, uid, now_, now_ + channel_.frame_airtime});
    schedule({EventKind::transmit_end, now_ + channel_.frame_airtime, node, receiver, uid, 0});
  }

  void on_transmit_end(const MediumEvent& ev) {
    auto& mac = macs_[ev.sender];
    const Packet packet = mac.queue.front().packet;
    const NodeId node = ev.sender, receiver = ev.receiver;

    const OnAir* self = nullptr;
    for (const auto& tx : active_)
      if (tx.sender == node && tx.uid == packet.uid && tx.end == now_) self = &tx;
    bool collided = false;
    for (const auto& tx : active_) {
      if (&tx == self) continue;
      const bool overlaps = tx.start < self->end && self->start < tx.end;
      if (overlaps && (tx.sender == receiver || topo_.linked(tx.sender, receiver))) collided = true;
    }

    record(TraceKind::tx_end, node, receiver, packet.uid, mac.attempt);
    if (collided) {
      record(TraceKind::collision, node, receiver, packet.uid, mac.attempt);
      ++counters_.collisions;
      drop(packet, TraceKind::collision);
    } else if (to_unit(draw(packet.uid, node, receiver, 0, kTagLoss)) < channel_.loss_prob) {
      record(TraceKind::loss, node, receiver, packet.uid, mac.attempt);
      ++counters_.losses;
      drop(packet, TraceKind::loss);
    } else {
      in_flight_.emplace(packet.uid, packet);
      schedule({EventKind::deliver, now_, node, receiver, packet.uid, 0});
    }

    std::erase_if(active_, [&](const OnAir& tx) { return tx.end + channel_.frame_airtime < now_; });
    advance_queue(node, packet.uid);
  }

  void on_deliver(const MediumEvent& ev) {
    auto node = in_flight_.extract(ev.uid);
    Packet packet = std::move(node.mapped());
    record(TraceKind::deliver, ev.sender, ev.receiver, packet.uid, 0);
    ++packet.hop;
    if (packet.hop + 1 >= packet.route.size()) {
      ++counters_.arrivals;
      if (on_arrival_) on_arrival_(packet, now_);
      return;
    }
    const NodeId next = packet.route[packet.hop + 1];
    enqueue(ev.receiver, next, std::move(packet), now_);
  }

  void on_mobility(const MediumEvent&) {
    step_mobility(topo_, mobility_dt_, mobility_rng_);
    record(TraceKind::mobility, 0, 0, 0, 0);
    schedule({EventKind::mobility, now_ + mobility_dt_, 0, 0, 0, 0});
  }

  Topology topo_;
  ChannelParams channel_;
  std::uint64_t seed_;
  SplitMix64 mobility_rng_;
  double mobility_dt_ = 0;
  double now_ = 0;
  std::uint64_t next_seq_ = 0;
  std::uint64_t pending_frame_events_ = 0;
  std::priority_queue<MediumEvent, std::vector<MediumEvent>, std::greater<>> queue_;
  std::unordered_map<NodeId, Mac> macs_;
  std::vector<OnAir> active_;
  std::unordered_map<std::uint64_t, Packet> in_flight_;
  Trace trace_;
  SimCounters counters_;
  ArrivalHandler on_arrival_;
  DropHandler on_drop_;
  RecordObserver on_record_;
};

}  // namespace sdup
