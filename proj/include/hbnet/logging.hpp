#pragma once

#include <string>
#include <string_view>

namespace hbnet::log {

enum class Level { debug, info, warn, error };

void set_json(bool enabled);
void set_min_level(Level level);

void write(Level level, std::string_view message);

inline void info(std::string_view m) { write(Level::info, m); }
inline void warn(std::string_view m) { write(Level::warn, m); }
inline void error(std::string_view m) { write(Level::error, m); }
inline void debug(std::string_view m) { write(Level::debug, m); }

}  // namespace hbnet::log
