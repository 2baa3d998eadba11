#include "einode/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace einode {
namespace {

std::atomic<LogLevel> g_level{LogLevel::warning};
std::mutex g_mutex;

void emit(const char* tag, const std::string& message) {
  std::lock_guard lock(g_mutex);
  std::cerr << "[einode " << tag << "] " << message << '\n';
}

}  // namespace

void set_log_level(LogLevel level) noexcept { g_level.store(level); }
LogLevel log_level() noexcept { return g_level.load(); }

void log_warning(const std::string& message) {
  if (g_level.load() >= LogLevel::warning) emit("warning", message);
}

void log_info(const std::string& message) {
  if (g_level.load() >= LogLevel::info) emit("info", message);
}

}  // namespace einode
