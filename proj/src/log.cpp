#include "derisk/log.hpp"

#include <cstdlib>
#include <iostream>
#include <string_view>

namespace derisk {

LogLevel log_level() {
  const char* env = std::getenv("DERISK_LOG");
  if (!env) return LogLevel::Warn;
  const std::string_view v(env);
  if (v == "error") return LogLevel::Error;
  if (v == "info") return LogLevel::Info;
  if (v == "debug") return LogLevel::Debug;
  return LogLevel::Warn;
}

void log(LogLevel level, const std::string& message) {
  static const LogLevel threshold = log_level();
  if (level > threshold) return;
  static constexpr const char* kNames[] = {"error", "warn", "info", "debug"};
  std::cerr << "[derisk " << kNames[static_cast<int>(level)] << "] " << message << '\n';
}

}  // namespace derisk
