#pragma once

#include <string>

namespace derisk {

enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };

/// Level from the DERISK_LOG environment variable (error, warn, info,
/// debug); warn when unset.
LogLevel log_level();

void log(LogLevel level, const std::string& message);

}  // namespace derisk
