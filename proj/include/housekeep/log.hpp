#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace housekeep::log {

enum class Level : int { Error = 0, Info = 1, Debug = 2 };

// Level comes from HOUSEKEEP_LOG in {error, info, debug}; defaults to error.
inline Level level() {
  static const Level lv = [] {
    const char* env = std::getenv("HOUSEKEEP_LOG");
    if (env == nullptr) return Level::Error;
    if (std::strcmp(env, "debug") == 0) return Level::Debug;
    if (std::strcmp(env, "info") == 0) return Level::Info;
    return Level::Error;
  }();
  return lv;
}

template <typename... Args>
void emit(Level lv, const char* tag, const char* fmt, Args... args) {
  if (static_cast<int>(lv) > static_cast<int>(level())) return;
  std::fprintf(stderr, "[%s] ", tag);
  std::fprintf(stderr, fmt, args...);
  std::fputc('\n', stderr);
}

template <typename... Args>
void error(const char* fmt, Args... args) { emit(Level::Error, "error", fmt, args...); }
template <typename... Args>
void info(const char* fmt, Args... args) { emit(Level::Info, "info", fmt, args...); }
template <typename... Args>
void debug(const char* fmt, Args... args) { emit(Level::Debug, "debug", fmt, args...); }

}  // namespace housekeep::log
