#include "livinglab/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace livinglab {

namespace {
std::atomic<LogLevel> g_level{LogLevel::Warning};
std::mutex g_mutex;

const char* label(LogLevel level) {
    switch (level) {
        case LogLevel::Debug: return "debug";
        case LogLevel::Info: return "info";
        case LogLevel::Warning: return "warning";
        case LogLevel::Error: return "error";
        case LogLevel::Off: return "off";
    }
    return "?";
}
}  // namespace

void set_log_level(LogLevel level) { g_level = level; }

LogLevel log_level() { return g_level; }

void log(LogLevel level, std::string_view message) {
    if (level < g_level.load() || level == LogLevel::Off) return;
    std::lock_guard lock(g_mutex);
    std::cerr << '[' << label(level) << "] " << message << '\n';
}

}  // namespace livinglab
