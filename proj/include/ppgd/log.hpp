#pragma once

#include <cstdio>
#include <string>

#include "ppgd/errors.hpp"

namespace ppgd {

enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };

inline LogLevel& log_level() {
  static LogLevel level = LogLevel::Warn;
  return level;
}

inline void set_log_level(LogLevel level) { log_level() = level; }

inline LogLevel log_level_from_name(const std::string& name) {
  if (name == "error") return LogLevel::Error;
  if (name == "warn") return LogLevel::Warn;
  if (name == "info") return LogLevel::Info;
  if (name == "debug") return LogLevel::Debug;
  throw Error("unknown log level: " + name);
}

inline void log(LogLevel level, const std::string& msg) {
  if (level > log_level()) return;
  static const char* names[] = {"error", "warn", "info", "debug"};
  std::fprintf(stderr, "[%s] %s\n", names[static_cast<int>(level)], msg.c_str());
}

}  // namespace ppgd
