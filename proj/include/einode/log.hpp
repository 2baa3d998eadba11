#pragma once

#include <string>

namespace einode {

enum class LogLevel { quiet = 0, warning = 1, info = 2 };

void set_log_level(LogLevel level) noexcept;
LogLevel log_level() noexcept;

/// Writes one line to stderr when the level permits. Thread-safe.
void log_warning(const std::string& message);
void log_info(const std::string& message);

}  // namespace einode
