#pragma once

#include <sstream>
#include <string>

namespace lipo {

enum class LogLevel { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };

/// Current verbosity. Initialized from the LIPO_LOG environment variable
/// (error|warn|info|debug), defaulting to warn.
LogLevel log_level();
void set_log_level(LogLevel level);

void log_message(LogLevel level, const std::string& message);

#define LIPO_LOG_AT(level, expr)                     \
  do {                                               \
    if (static_cast<int>(level) <=                   \
        static_cast<int>(::lipo::log_level())) {     \
      std::ostringstream lipo_log_os_;               \
      lipo_log_os_ << expr;                          \
      ::lipo::log_message(level, lipo_log_os_.str());\
    }                                                \
  } while (0)

#define LIPO_ERROR(expr) LIPO_LOG_AT(::lipo::LogLevel::kError, expr)
#define LIPO_WARN(expr) LIPO_LOG_AT(::lipo::LogLevel::kWarn, expr)
#define LIPO_INFO(expr) LIPO_LOG_AT(::lipo::LogLevel::kInfo, expr)
#define LIPO_DEBUG(expr) LIPO_LOG_AT(::lipo::LogLevel::kDebug, expr)

}  // namespace lipo
