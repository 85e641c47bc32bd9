#include "dualray/logging.hpp"

#include <iostream>
#include <mutex>

namespace dualray {

namespace {

std::mutex& sink_mutex() {
  static std::mutex mu;
  return mu;
}

LogSink& current_sink() {
  static LogSink sink = [](LogLevel level, const std::string& message) {
    if (level == LogLevel::kWarning) std::cerr << "warning: " << message << '\n';
    if (level == LogLevel::kError) std::cerr << "error: " << message << '\n';
  };
  return sink;
}

}  // namespace

LogSink set_log_sink(LogSink sink) {
  std::lock_guard<std::mutex> lock(sink_mutex());
  LogSink previous = std::move(current_sink());
  current_sink() = std::move(sink);
  return previous;
}

void log_message(LogLevel level, const std::string& message) {
  std::lock_guard<std::mutex> lock(sink_mutex());
  if (current_sink()) current_sink()(level, message);
}

}  // namespace dualray
