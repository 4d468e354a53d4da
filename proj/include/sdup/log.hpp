#pragma once

#include <cstdio>
#include <cstring>
#include <string>

namespace sdup {

enum class LogLevel : int { off = 0, info = 1, trace = 2 };

inline LogLevel& log_level() {
  static LogLevel level = LogLevel::off;
  return level;
}

// SDUP_LOG=info|trace; anything else is off.
inline LogLevel log_level_from(const char* value) {
  if (!value) return LogLevel::off;
  if (std::strcmp(value, "trace") == 0) return LogLevel::trace;
  if (std::strcmp(value, "info") == 0) return LogLevel::info;
  return LogLevel::off;
}

inline void log(LogLevel level, const std::string& msg) {
  if (level == LogLevel::off || static_cast<int>(level) > static_cast<int>(log_level())) return;
  std::fprintf(stderr, "[sdup %s] %s\n", level == LogLevel::trace ? "trace" : "info", msg.c_str());
}

}  // namespace sdup
