#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace coagprofile {

/// Verbosity read once from the COAGPROFILE_LOG environment variable:
/// "quiet" (or "0"), "info" (default), "debug".
enum class LogLevel : int { Quiet = 0, Info = 1, Debug = 2 };

inline LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("COAGPROFILE_LOG");
    if (env == nullptr) return LogLevel::Info;
    if (std::strcmp(env, "quiet") == 0 || std::strcmp(env, "0") == 0) return LogLevel::Quiet;
    if (std::strcmp(env, "debug") == 0 || std::strcmp(env, "2") == 0) return LogLevel::Debug;
    return LogLevel::Info;
  }();
  return level;
}

template <typename... Args>
void log_info(const char* format, Args... args) {
  if (log_level() >= LogLevel::Info) {
    std::fprintf(stderr, "[coagprofile] ");
    std::fprintf(stderr, format, args...);
    std::fprintf(stderr, "\n");
  }
}

template <typename... Args>
void log_debug(const char* format, Args... args) {
  if (log_level() >= LogLevel::Debug) {
    std::fprintf(stderr, "[coagprofile:debug] ");
    std::fprintf(stderr, format, args...);
    std::fprintf(stderr, "\n");
  }
}

}  // namespace coagprofile
