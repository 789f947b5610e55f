#pragma once

#include <string_view>

namespace aemr::log {

enum class Level { Quiet, Warning, Info };

void set_level(Level level);
Level level();

void warn(std::string_view message);
void info(std::string_view message);

}  // namespace aemr::log
