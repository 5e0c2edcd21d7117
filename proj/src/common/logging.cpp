#include "hbnet/logging.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

#include <json.hpp>

namespace hbnet::log {
namespace {

std::atomic<bool> g_json{false};
std::atomic<int> g_min_level{static_cast<int>(Level::info)};
std::mutex g_mutex;

const char* level_name(Level level) {
    switch (level) {
        case Level::debug: return "debug";
        case Level::info: return "info";
        case Level::warn: return "warn";
        case Level::error: return "error";
    }
    return "info";
}

}  // namespace

void set_json(bool enabled) { g_json = enabled; }
void set_min_level(Level level) { g_min_level = static_cast<int>(level); }

void write(Level level, std::string_view message) {
    if (static_cast<int>(level) < g_min_level) return;
    std::lock_guard lock(g_mutex);
    if (g_json) {
        nlohmann::json j{{"level", level_name(level)}, {"msg", std::string(message)}};
        std::cerr << j.dump() << '\n';
    } else {
        std::cerr << "[" << level_name(level) << "] " << message << '\n';
    }
}

}  // namespace hbnet::log
