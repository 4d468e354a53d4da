#pragma once

#include <algorithm>
#include <charconv>
#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "sdup/adversary.hpp"
#include "sdup/error.hpp"
#include "sdup/log.hpp"
#include "sdup/random.hpp"
#include "sdup/secroute.hpp"
#include "sdup/session.hpp"
#include "sdup/topology.hpp"

namespace sdup {

// Scenario file: one `key = value` per line, '#' comments. Every key has a
// default; see kScenarioKeys for the full list.
struct ScenarioConfig {
  std::string topology_file;  // empty: generate a random topology per trial
  std::size_t nodes = 50;
  double arena_width = 1000;
  double arena_height = 1000;
  double radio_range = 250;
  double speed_min = 0;  // m/s, uniform per node
  double speed_max = 5;
  double compromise_prob = 0.1;  // generated topologies only
  std::size_t k = 3;
  std::size_t r = 1;
  double theta = 1.0;
  std::size_t max_paths = 3;
  Allocation allocation = Allocation::duplicate;
  ChannelParams channel;
  std::size_t message_len = 1024;
  std::size_t trials = 100;
  std::uint64_t seed = 1;
  double mobility_dt = 1.0;
  double warmup = 0;   // seconds of mobility before the session
  double timeout = 0;  // 0: default receiver timeout
  NodeId source = 0;
  std::optional<NodeId> destination;  // default: largest node id

  friend bool operator==(const ScenarioConfig& a, const ScenarioConfig& b) {
    auto ch = [](const ChannelParams& c) {
      return std::tuple{c.frame_airtime, c.loss_prob, c.backoff_slot, c.max_backoffs, c.contention_window, c.carrier_sense};
    };
    return std::tuple{a.topology_file, a.nodes, a.arena_width, a.arena_height, a.radio_range, a.speed_min, a.speed_max,
                      a.compromise_prob, a.k, a.r, a.theta, a.max_paths, a.allocation, a.message_len, a.trials,
                      a.seed, a.mobility_dt, a.warmup, a.timeout, a.source, a.destination} ==
               std::tuple{b.topology_file, b.nodes, b.arena_width, b.arena_height, b.radio_range, b.speed_min,
                          b.speed_max, b.compromise_prob, b.k, b.r, b.theta, b.max_paths, b.allocation, b.message_len,
                          b.trials, b.seed, b.mobility_dt, b.warmup, b.timeout, b.source, b.destination} &&
           ch(a.channel) == ch(b.channel);
  }
};

inline constexpr std::string_view kScenarioKeys[] = {
    "topology_file", "nodes",        "arena_width",  "arena_height",     "radio_range",  "speed_min",
    "speed_max",     "compromise_prob", "k",         "r",                "theta",        "max_paths",
    "allocation",    "frame_airtime", "loss_prob",   "backoff_slot",     "max_backoffs", "contention_window",
    "carrier_sense", "message_len",  "trials",       "seed",             "mobility_dt",  "warmup",
    "timeout",       "source",       "destination",
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <class T>
T parse_number(std::string_view v, const std::string& where) {
  T out{};
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size())
    throw Error(ErrorCode::configuration, where + ": malformed value '" + std::string(v) + "'");
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(out)) throw Error(ErrorCode::configuration, where + ": value must be finite");
  }
  return out;
}

inline bool parse_bool(std::string_view v, const std::string& where) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw Error(ErrorCode::configuration, where + ": expected true or false, got '" + std::string(v) + "'");
}

inline std::string shortest(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline void require(bool ok, const std::string& where, const std::string& what) {
  if (!ok) throw Error(ErrorCode::configuration, where + ": " + what);
}

}  // namespace detail

// Sets one field from its textual value. `where` prefixes error messages.
inline void set_scenario_value(ScenarioConfig& c, std::string_view key, std::string_view v, const std::string& where) {
  using detail::parse_number;
  using detail::require;
  auto prob = [&](double& field) {
    field = parse_number<double>(v, where);
    require(field >= 0 && field <= 1, where, std::string(key) + " must be in [0, 1]");
  };
  auto positive = [&](double& field) {
    field = parse_number<double>(v, where);
    require(field > 0, where, std::string(key) + " must be > 0");
  };
  auto nonneg = [&](double& field) {
    field = parse_number<double>(v, where);
    require(field >= 0, where, std::string(key) + " must be >= 0");
  };
  auto count = [&](std::size_t& field, std::size_t min) {
    field = parse_number<std::size_t>(v, where);
    require(field >= min, where, std::string(key) + " must be >= " + std::to_string(min));
  };

  if (key == "topology_file") c.topology_file = std::string(v);
  else if (key == "nodes") count(c.nodes, 2);
  else if (key == "arena_width") positive(c.arena_width);
  else if (key == "arena_height") positive(c.arena_height);
  else if (key == "radio_range") positive(c.radio_range);
  else if (key == "speed_min") nonneg(c.speed_min);
  else if (key == "speed_max") nonneg(c.speed_max);
  else if (key == "compromise_prob") prob(c.compromise_prob);
  else if (key == "k") count(c.k, 1);
  else if (key == "r") count(c.r, 0);
  else if (key == "theta") nonneg(c.theta);
  else if (key == "max_paths") count(c.max_paths, 1);
  else if (key == "allocation") {
    if (v == "duplicate") c.allocation = Allocation::duplicate;
    else if (v == "spread") c.allocation = Allocation::spread;
    else throw Error(ErrorCode::configuration, where + ": allocation must be duplicate or spread");
  }
  else if (key == "frame_airtime") positive(c.channel.frame_airtime);
  else if (key == "loss_prob") prob(c.channel.loss_prob);
  else if (key == "backoff_slot") positive(c.channel.backoff_slot);
  else if (key == "max_backoffs") c.channel.max_backoffs = parse_number<std::uint32_t>(v, where);
  else if (key == "contention_window") {
    c.channel.contention_window = parse_number<std::uint32_t>(v, where);
    require(c.channel.contention_window >= 1, where, "contention_window must be >= 1");
  }
  else if (key == "carrier_sense") c.channel.carrier_sense = detail::parse_bool(v, where);
  else if (key == "message_len") count(c.message_len, 1);
  else if (key == "trials") count(c.trials, 1);
  else if (key == "seed") c.seed = parse_number<std::uint64_t>(v, where);
  else if (key == "mobility_dt") positive(c.mobility_dt);
  else if (key == "warmup") nonneg(c.warmup);
  else if (key == "timeout") nonneg(c.timeout);
  else if (key == "source") c.source = parse_number<NodeId>(v, where);
  else if (key == "destination") c.destination = parse_number<NodeId>(v, where);
  else throw Error(ErrorCode::configuration, where + ": unknown key '" + std::string(key) + "'");
}

// Cross-field checks.
inline void validate_scenario(const ScenarioConfig& c) {
  detail::require(c.speed_min <= c.speed_max, "scenario", "speed_min exceeds speed_max");
  detail::require(c.k + c.r <= 255, "scenario", "k + r must be <= 255");
  if (c.topology_file.empty()) {
    detail::require(c.source < c.nodes, "scenario", "source is not a generated node id");
    detail::require(!c.destination || *c.destination < c.nodes, "scenario", "destination is not a generated node id");
  }
  if (c.destination) detail::require(*c.destination != c.source, "scenario", "source equals destination");
}

inline ScenarioConfig load_scenario(std::string_view text) {
  ScenarioConfig c;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no);
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw Error(ErrorCode::configuration, where + ": expected key = value");
    set_scenario_value(c, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)), where);
  }
  validate_scenario(c);
  return c;
}

inline std::string serialize_scenario(const ScenarioConfig& c) {
  using detail::shortest;
  std::string out;
  auto put = [&](std::string_view k, const std::string& v) {
    out.append(k);
    out += " = ";
    out += v;
    out += '\n';
  };
  if (!c.topology_file.empty()) put("topology_file", c.topology_file);
  put("nodes", std::to_string(c.nodes));
  put("arena_width", shortest(c.arena_width));
  put("arena_height", shortest(c.arena_height));
  put("radio_range", shortest(c.radio_range));
  put("speed_min", shortest(c.speed_min));
  put("speed_max", shortest(c.speed_max));
  put("compromise_prob", shortest(c.compromise_prob));
  put("k", std::to_string(c.k));
  put("r", std::to_string(c.r));
  put("theta", shortest(c.theta));
  put("max_paths", std::to_string(c.max_paths));
  put("allocation", to_string(c.allocation));
  put("frame_airtime", shortest(c.channel.frame_airtime));
  put("loss_prob", shortest(c.channel.loss_prob));
  put("backoff_slot", shortest(c.channel.backoff_slot));
  put("max_backoffs", std::to_string(c.channel.max_backoffs));
  put("contention_window", std::to_string(c.channel.contention_window));
  put("carrier_sense", c.channel.carrier_sense ? "true" : "false");
  put("message_len", std::to_string(c.message_len));
  put("trials", std::to_string(c.trials));
  put("seed", std::to_string(c.seed));
  put("mobility_dt", shortest(c.mobility_dt));
  put("warmup", shortest(c.warmup));
  put("timeout", shortest(c.timeout));
  put("source", std::to_string(c.source));
  if (c.destination) put("destination", std::to_string(*c.destination));
  return out;
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TrialMetrics {
  std::size_t trial = 0;
  bool delivered = false;
  bool oracle_success = false;
  bool blind_success = false;
  std::uint64_t frames_sent = 0;
  std::uint64_t collisions = 0;
  std::uint64_t backoff_exhausted = 0;
  double overhead_ratio = 0;  // wire bytes sent / message bytes
  double path_cost = 0;       // security cost of the primary path

  friend bool operator==(const TrialMetrics&, const TrialMetrics&) = default;
};

// Independent random streams of one trial, all derived from mix(seed, t).
struct TrialSeeds {
  std::uint64_t base;
  std::uint64_t topology() const { return mix64(base, 1); }
  std::uint64_t compromise(NodeId id) const { return mix64(base, 2, id); }
  std::uint64_t message() const { return mix64(base, 3); }
  std::uint64_t key() const { return mix64(base, 4); }
  std::uint64_t shares() const { return mix64(base, 5); }
  std::uint64_t channel() const { return mix64(base, 6); }
  std::uint64_t warmup() const { return mix64(base, 7); }
};

inline Topology generate_topology(const ScenarioConfig& c, std::uint64_t seed) {
  SplitMix64 rng(seed);
  const Arena arena{c.arena_width, c.arena_height};
  std::vector<NodeState> nodes;
  nodes.reserve(c.nodes);
  for (std::size_t i = 0; i < c.nodes; ++i) {
    NodeState n;
    n.id = static_cast<NodeId>(i);
    n.position = random_point(arena, rng);
    n.speed = uniform_real(rng, c.speed_min, c.speed_max);
    n.radio_range = c.radio_range;
    n.compromise_prob = c.compromise_prob;
    nodes.push_back(n);
  }
  return Topology(std::move(nodes), arena);
}

inline NodeId scenario_destination(const ScenarioConfig& c, const Topology& topo) {
  if (c.destination) return *c.destination;
  NodeId best = 0;
  for (const auto& n : topo.nodes()) best = std::max(best, n.id);
  return best;
}

// One independent trial. `fixed` is the parsed topology file, if any.
inline TrialMetrics run_trial(const ScenarioConfig& c, const std::optional<Topology>& fixed, std::size_t t) {
  const TrialSeeds seeds{mix64(c.seed, t)};
  TrialMetrics m;
  m.trial = t;

  Topology topo = fixed ? *fixed : generate_topology(c, seeds.topology());
  const NodeId src = c.source, dst = scenario_destination(c, topo);
  // Compromise draws are keyed by node id and independent of the probability,
  // so raising compromise_prob only ever adds compromised nodes.
  for (auto& n : topo.mutable_nodes())
    n.compromised = n.id != src && n.id != dst && to_unit(seeds.compromise(n.id)) < n.compromise_prob;
  if (c.warmup > 0) {
    SplitMix64 rng(seeds.warmup());
    for (double done = 0; done < c.warmup; done += c.mobility_dt) step_mobility(topo, std::min(c.mobility_dt, c.warmup - done), rng);
  }

  PathSet set;
  try {
    set = discover_disjoint_paths(topo, src, dst, c.max_paths);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::unreachable) throw;
    log(LogLevel::trace, "trial " + std::to_string(t) + ": destination unreachable");
    return m;
  }
  const Path primary = select_path(set, topo);
  const auto plan = redundancy_decision(average_mobility(topo), set.paths.size(), {c.k, c.r, c.theta});

  SessionConfig session;
  SplitMix64 key_rng(seeds.key());
  for (std::size_t i = 0; i < session.key.key.size(); i += 8) {
    const auto w = key_rng();
    for (std::size_t b = 0; b < 8; ++b) session.key.key[i + b] = static_cast<std::uint8_t>(w >> (8 * b));
  }
  session.key.session_id = static_cast<std::uint32_t>(key_rng());
  session.k = plan.k;
  session.n = plan.n;
  session.primary = primary;
  session.allocation = c.allocation;
  if (c.timeout > 0) session.timeout = c.timeout;
  if (plan.duplicate_paths > 0) {
    PathSet rest;
    for (const auto& p : set.paths)
      if (p != primary) rest.paths.push_back(p);
    session.duplicates.push_back(select_path(rest, topo));
  }

  Bytes message(c.message_len);
  SplitMix64 msg_rng(seeds.message());
  for (auto& b : message) b = static_cast<std::uint8_t>(msg_rng());

  Simulator sim(topo, c.channel, seeds.channel());
  if (std::any_of(topo.nodes().begin(), topo.nodes().end(), [](const NodeState& n) { return n.speed > 0; }))
    sim.enable_mobility(c.mobility_dt);
  SplitMix64 share_rng(seeds.shares());
  const auto out = run_session(sim, session, message, share_rng);

  const auto log_frames = capture_frames(sim.trace(), sim.topology(), CaptureScope::overhear, out.first_record, out.end_record);
  const auto layout = make_layout(session.key, session.n);
  m.delivered = out.delivered;
  m.oracle_success = oracle_attack(log_frames, session.key.session_id, layout, session.k);
  m.blind_success = session.n <= kBlindMaxShares && blind_attack(log_frames, session.key.session_id, layout, session.k);
  m.frames_sent = out.frames_sent;
  m.collisions = sim.counters().collisions;
  m.backoff_exhausted = sim.counters().backoff_exhausted;
  m.overhead_ratio = static_cast<double>(out.bytes_sent) / static_cast<double>(message.size());
  m.path_cost = path_security_cost(primary, topo);
  log(LogLevel::trace, "trial " + std::to_string(t) + ": n=" + std::to_string(session.n) + " paths=" +
                           std::to_string(session.paths().size()) + " delivered=" + std::to_string(m.delivered));
  return m;
}

inline std::optional<Topology> load_scenario_topology(const ScenarioConfig& c) {
  if (c.topology_file.empty()) return std::nullopt;
  auto topo = parse_topology(read_text_file(c.topology_file));
  if (!topo.contains(c.source)) throw Error(ErrorCode::configuration, "source " + std::to_string(c.source) + " not in topology");
  const NodeId dst = scenario_destination(c, topo);
  if (!topo.contains(dst)) throw Error(ErrorCode::configuration, "destination " + std::to_string(dst) + " not in topology");
  if (dst == c.source) throw Error(ErrorCode::configuration, "source equals destination");
  return topo;
}

// Trials run one after another; each depends only on (config, t).
inline std::vector<TrialMetrics> run_trials(const ScenarioConfig& c) {
  validate_scenario(c);
  const auto fixed = load_scenario_topology(c);
  std::vector<TrialMetrics> out;
  out.reserve(c.trials);
  for (std::size_t t = 0; t < c.trials; ++t) out.push_back(run_trial(c, fixed, t));
  log(LogLevel::info, "ran " + std::to_string(c.trials) + " trials");
  return out;
}

inline constexpr std::string_view kCsvHeader =
    "trial,delivered,oracle_success,blind_success,frames_sent,collisions,backoff_exhausted,overhead_ratio,path_cost\n";

inline std::string format_csv(const std::vector<TrialMetrics>& rows) {
  std::string out(kCsvHeader);
  char buf[256];
  for (const auto& m : rows) {
    std::snprintf(buf, sizeof buf, "%zu,%d,%d,%d,%" PRIu64 ",%" PRIu64 ",%" PRIu64 ",%.6f,%.6f\n", m.trial,
                  m.delivered ? 1 : 0, m.oracle_success ? 1 : 0, m.blind_success ? 1 : 0, m.frames_sent, m.collisions,
                  m.backoff_exhausted, m.overhead_ratio, m.path_cost);
    out += buf;
  }
  return out;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::io, "cannot write " + path.string());
  f << text;
  f.flush();
  if (!f) throw Error(ErrorCode::io, "write failed for " + path.string());
}

inline void write_csv(const std::vector<TrialMetrics>& rows, const std::filesystem::path& path) {
  write_text_file(path, format_csv(rows));
}

struct SweepPoint {
  std::string value;
  std::vector<TrialMetrics> metrics;
};

struct Summary {
  double delivery_rate = 0;
  double oracle_rate = 0;
  double blind_rate = 0;
  double mean_frames_sent = 0;
  double mean_collisions = 0;
  double mean_overhead = 0;
  double mean_path_cost = 0;
};

inline Summary summarize(const std::vector<TrialMetrics>& rows) {
  Summary s;
  if (rows.empty()) return s;
  for (const auto& m : rows) {
    s.delivery_rate += m.delivered;
    s.oracle_rate += m.oracle_success;
    s.blind_rate += m.blind_success;
    s.mean_frames_sent += static_cast<double>(m.frames_sent);
    s.mean_collisions += static_cast<double>(m.collisions);
    s.mean_overhead += m.overhead_ratio;
    s.mean_path_cost += m.path_cost;
  }
  const double n = static_cast<double>(rows.size());
  for (double* v : {&s.delivery_rate, &s.oracle_rate, &s.blind_rate, &s.mean_frames_sent, &s.mean_collisions,
                    &s.mean_overhead, &s.mean_path_cost})
    *v /= n;
  return s;
}

inline std::vector<SweepPoint> sweep(const ScenarioConfig& base, std::string_view param, const std::vector<std::string>& values) {
  if (std::find(std::begin(kScenarioKeys), std::end(kScenarioKeys), param) == std::end(kScenarioKeys))
    throw Error(ErrorCode::configuration, "unknown sweep parameter '" + std::string(param) + "'");
  std::vector<SweepPoint> out;
  for (const auto& v : values) {
    ScenarioConfig c = base;
    set_scenario_value(c, param, v, std::string(param) + "=" + v);
    validate_scenario(c);
    log(LogLevel::info, "sweep " + std::string(param) + " = " + v);
    out.push_back({v, run_trials(c)});
  }
  return out;
}

inline std::string format_summary(std::string_view param, const std::vector<SweepPoint>& points) {
  std::string out(param);
  out += ",trials,delivery_rate,oracle_rate,blind_rate,mean_frames_sent,mean_collisions,mean_overhead,mean_path_cost\n";
  char buf[256];
  for (const auto& p : points) {
    const auto s = summarize(p.metrics);
    std::snprintf(buf, sizeof buf, ",%zu,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n", p.metrics.size(), s.delivery_rate,
                  s.oracle_rate, s.blind_rate, s.mean_frames_sent, s.mean_collisions, s.mean_overhead, s.mean_path_cost);
    out += p.value;
    out += buf;
  }
  return out;
}

}  // namespace sdup
