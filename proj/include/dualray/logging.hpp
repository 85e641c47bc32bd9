#pragma once

#include <functional>
#include <string>

namespace dualray {

enum class LogLevel { kDebug, kInfo, kWarning, kError };

using LogSink = std::function<void(LogLevel, const std::string&)>;

/// Replaces the process-wide sink and returns the previous one. The default
/// sink prints warnings and errors to stderr.
LogSink set_log_sink(LogSink sink);
void log_message(LogLevel level, const std::string& message);

}  // namespace dualray
