#include "stacktier/common.hpp"

#include <atomic>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <mutex>

namespace stacktier {

namespace {

LogLevel parse_level(const char* s) {
    if (s == nullptr) return LogLevel::warn;
    if (std::strcmp(s, "error") == 0) return LogLevel::error;
    if (std::strcmp(s, "warn") == 0) return LogLevel::warn;
    if (std::strcmp(s, "info") == 0) return LogLevel::info;
    if (std::strcmp(s, "debug") == 0) return LogLevel::debug;
    return LogLevel::warn;
}

std::atomic<LogLevel> g_level{parse_level(std::getenv("STACKTIER_LOG"))};

const char* level_tag(LogLevel level) {
    switch (level) {
        case LogLevel::error: return "error";
        case LogLevel::warn: return "warn";
        case LogLevel::info: return "info";
        case LogLevel::debug: return "debug";
    }
    return "?";
}

std::mutex g_log_mutex;

}  // namespace

LogLevel log_level() { return g_level.load(); }

void set_log_level(LogLevel level) { g_level.store(level); }

void log_msg(LogLevel level, const std::string& msg) {
    if (level > g_level.load()) return;
    std::lock_guard<std::mutex> lock(g_log_mutex);
    std::fprintf(stderr, "[%s] %s\n", level_tag(level), msg.c_str());
}

std::string format_fixed(double value, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
    return buf;
}

std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

}  // namespace stacktier
