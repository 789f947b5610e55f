#include "aemr/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace aemr::log {
namespace {

std::atomic<Level> current_level{Level::Warning};
std::mutex sink_mutex;

void emit(std::string_view tag, std::string_view message) {
  std::lock_guard lock(sink_mutex);
  std::cerr << "[aemr] " << tag << ": " << message << '\n';
}

}  // namespace

void set_level(Level level) { current_level = level; }
Level level() { return current_level; }

void warn(std::string_view message) {
  if (current_level >= Level::Warning) emit("warning", message);
}

void info(std::string_view message) {
  if (current_level >= Level::Info) emit("info", message);
}

}  // namespace aemr::log
