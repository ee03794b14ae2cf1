#pragma once

// Diagnostics on stderr, gated by GRADSTL_LOG = off | info | debug
// (default off). Standard output is reserved for results.

#include <cstdlib>
#include <iostream>
#include <string>
#include <string_view>

namespace gradstl::log {

enum class Level { Off = 0, Info = 1, Debug = 2 };

inline Level level_from_env() {
  const char* raw = std::getenv("GRADSTL_LOG");
  const std::string_view v = raw == nullptr ? "" : raw;
  if (v == "debug") return Level::Debug;
  if (v == "info") return Level::Info;
  return Level::Off;
}

inline Level& threshold() {
  static Level level = level_from_env();
  return level;
}

inline void write(Level level, std::string_view tag, const std::string& msg) {
  if (static_cast<int>(level) > static_cast<int>(threshold())) return;
  std::cerr << "[gradstl " << tag << "] " << msg << '\n';
}

inline void info(const std::string& msg) { write(Level::Info, "info", msg); }
inline void debug(const std::string& msg) { write(Level::Debug, "debug", msg); }

}  // namespace gradstl::log
