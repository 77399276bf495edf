#pragma once

#include <string_view>

namespace livinglab {

enum class LogLevel { Debug, Info, Warning, Error, Off };

/// Messages below the threshold are dropped. Default: Warning.
void set_log_level(LogLevel level);
LogLevel log_level();

/// Writes "[level] message" to stderr; thread-safe.
void log(LogLevel level, std::string_view message);

}  // namespace livinglab
