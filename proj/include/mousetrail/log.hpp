#pragma once

#include <atomic>
#include <iostream>
#include <string_view>

namespace mousetrail::log {

enum class Level { Debug = 0, Info = 1, Warn = 2, Error = 3, Off = 4 };

inline std::atomic<Level>& threshold() {
  static std::atomic<Level> level{Level::Warn};
  return level;
}

inline void set_level(Level level) { threshold().store(level); }

// All diagnostics go to standard error.
inline void write(Level level, std::string_view message) {
  if (level < threshold().load()) return;
  static constexpr std::string_view kTags[] = {"debug", "info", "warn", "error", "off"};
  std::clog << "[mousetrail " << kTags[static_cast<int>(level)] << "] " << message << '\n';
}

inline void debug(std::string_view m) { write(Level::Debug, m); }
inline void info(std::string_view m) { write(Level::Info, m); }
inline void warn(std::string_view m) { write(Level::Warn, m); }
inline void error(std::string_view m) { write(Level::Error, m); }

}  // namespace mousetrail::log
