#pragma once

#include <stdexcept>
#include <string>

namespace stacktier {

/// Thrown for every recoverable failure: bad input data, invalid
/// configuration, malformed files. Messages are prefixed with the
/// operation that failed.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class LogLevel { error = 0, warn = 1, info = 2, debug = 3 };

// Process-wide verbosity. Initialized once from the STACKTIER_LOG
// environment variable (error|warn|info|debug); defaults to warn.
LogLevel log_level();
void set_log_level(LogLevel level);

void log_msg(LogLevel level, const std::string& msg);

inline void log_error(const std::string& msg) { log_msg(LogLevel::error, msg); }
inline void log_warn(const std::string& msg) { log_msg(LogLevel::warn, msg); }
inline void log_info(const std::string& msg) { log_msg(LogLevel::info, msg); }
inline void log_debug(const std::string& msg) { log_msg(LogLevel::debug, msg); }

/// Fixed-precision decimal formatting ("%.4f" style).
std::string format_fixed(double value, int decimals);

/// Shortest round-trip representation of a double.
std::string format_double(double value);

}  // namespace stacktier
