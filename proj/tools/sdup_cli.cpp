// sdup command line: scenario runs, parameter sweeps and the frame codec.
//
//   sdup run    --scenario FILE [--seed N] [--trials N] [--out CSV]
//   sdup sweep  --scenario FILE --param NAME --values a,b,c --out DIR
//   sdup encode --key HEX32 --k K --n N [--session ID] [--seed N]  < message > container
//   sdup decode --key HEX32 --k K --n N [--session ID]            < container > message
//
// Exit status: 0 ok, 2 configuration error, 1 any other failure.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "sdup/frame_codec.hpp"
#include "sdup/harness.hpp"
#include "sdup/log.hpp"
#include "sdup/wire.hpp"

namespace fs = std::filesystem;
using namespace sdup;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

ScenarioConfig scenario_from_file(const std::string& file) {
  auto config = load_scenario(read_text_file(file));
  // Relative topology paths are relative to the scenario file.
  if (!config.topology_file.empty() && fs::path(config.topology_file).is_relative())
    config.topology_file = (fs::path(file).parent_path() / config.topology_file).string();
  return config;
}

SessionKey parse_key(const std::string& hex, std::uint32_t session) {
  if (hex.size() != 32) throw Error(ErrorCode::configuration, "--key needs 32 hex digits");
  SessionKey key;
  key.session_id = session;
  for (std::size_t i = 0; i < 16; ++i) {
    unsigned v = 0;
    auto [p, ec] = std::from_chars(hex.data() + 2 * i, hex.data() + 2 * i + 2, v, 16);
    if (ec != std::errc() || p != hex.data() + 2 * i + 2) throw Error(ErrorCode::configuration, "--key is not hex");
    key.key[i] = static_cast<std::uint8_t>(v);
  }
  return key;
}

Bytes read_stdin() {
  Bytes out;
  char buf[65536];
  std::size_t got = 0;
  while ((got = std::fread(buf, 1, sizeof buf, stdin)) > 0) out.insert(out.end(), buf, buf + got);
  if (std::ferror(stdin)) throw Error(ErrorCode::io, "reading standard input");
  return out;
}

void write_stdout(const Bytes& data) {
  if (std::fwrite(data.data(), 1, data.size(), stdout) != data.size() || std::fflush(stdout) != 0)
    throw Error(ErrorCode::io, "writing standard output");
}

std::vector<std::string> split_values(const std::string& list) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= list.size()) {
    const auto comma = list.find(',', start);
    auto item = list.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (item.empty()) throw Error(ErrorCode::configuration, "empty entry in --values");
    out.push_back(std::move(item));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  log_level() = log_level_from(std::getenv("SDUP_LOG"));

  CLI::App app{"Secret-shared, shuffled unipath transfer over a simulated ad hoc network"};
  app.require_subcommand(1);

  std::string scenario_file, out_path, param, values, key_hex;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::size_t k = 0, n = 0;
  std::uint32_t session = 0;

  auto* run = app.add_subcommand("run", "run a scenario and write one CSV row per trial");
  run->add_option("--scenario", scenario_file, "scenario file")->required();
  run->add_option("--seed", seed, "override the scenario seed");
  run->add_option("--trials", trials, "override the trial count")->check(CLI::PositiveNumber);
  run->add_option("--out", out_path, "CSV destination (default: standard output)");

  auto* sw = app.add_subcommand("sweep", "rerun a scenario for each value of one parameter");
  sw->add_option("--scenario", scenario_file, "scenario file")->required();
  sw->add_option("--param", param, "scenario key to vary")->required();
  sw->add_option("--values", values, "comma-separated values")->required();
  sw->add_option("--out", out_path, "output directory")->required();

  auto* enc = app.add_subcommand("encode", "message on stdin -> SDUP1 container on stdout");
  auto* dec = app.add_subcommand("decode", "SDUP1 container on stdin -> message on stdout");
  for (auto* cmd : {enc, dec}) {
    cmd->add_option("--key", key_hex, "128-bit key as 32 hex digits")->required();
    cmd->add_option("--k", k, "threshold")->required()->check(CLI::Range(1, 255));
    cmd->add_option("--n", n, "share count")->required()->check(CLI::Range(1, 255));
    cmd->add_option("--session", session, "session id");
  }
  enc->add_option("--seed", seed, "share randomness seed (default: random device)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) {
      auto config = scenario_from_file(scenario_file);
      if (seed) config.seed = *seed;
      if (trials) config.trials = *trials;
      log(LogLevel::info, "scenario " + scenario_file + ", seed " + std::to_string(config.seed) + ", " +
                              std::to_string(config.trials) + " trials");
      const auto rows = run_trials(config);
      if (out_path.empty()) {
        const auto csv = format_csv(rows);
        write_stdout(Bytes(csv.begin(), csv.end()));
      } else {
        write_csv(rows, out_path);
      }
      const auto s = summarize(rows);
      log(LogLevel::info, "delivery " + std::to_string(s.delivery_rate) + ", oracle " + std::to_string(s.oracle_rate) +
                              ", blind " + std::to_string(s.blind_rate));
    } else if (*sw) {
      const auto config = scenario_from_file(scenario_file);
      const auto points = sweep(config, param, split_values(values));
      std::error_code ec;
      fs::create_directories(out_path, ec);
      if (ec) throw Error(ErrorCode::io, "cannot create " + out_path + ": " + ec.message());
      for (const auto& p : points) write_csv(p.metrics, fs::path(out_path) / (param + "_" + p.value + ".csv"));
      write_text_file(fs::path(out_path) / "summary.csv", format_summary(param, points));
    } else if (*enc) {
      const auto key = parse_key(key_hex, session);
      if (k > n) throw Error(ErrorCode::configuration, "--k exceeds --n");
      const auto message = read_stdin();
      if (message.empty()) throw Error(ErrorCode::parameter, "empty message on standard input");
      SplitMix64 rng(seed ? *seed : (static_cast<std::uint64_t>(std::random_device{}()) << 32) ^ std::random_device{}());
      FrameContainer c{n, k, encode_frames(split(message, k, n, rng), key)};
      write_stdout(write_container(c));
      log(LogLevel::info, "encoded " + std::to_string(message.size()) + " bytes into " + std::to_string(c.frames.size()) + " frames");
    } else if (*dec) {
      const auto key = parse_key(key_hex, session);
      if (k > n) throw Error(ErrorCode::configuration, "--k exceeds --n");
      const auto c = read_container(read_stdin());
      if (c.k != k || c.n != n)
        throw Error(ErrorCode::malformed, "container is (k=" + std::to_string(c.k) + ", n=" + std::to_string(c.n) + ")");
      write_stdout(decode_frames(c.frames, key, n, k));
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "sdup: %s\n", e.what());
    return e.code() == ErrorCode::configuration ? kExitConfig : kExitRuntime;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "sdup: %s\n", e.what());
    return kExitRuntime;
  }
  return 0;
}
