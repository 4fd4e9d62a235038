#pragma once

#include <json.hpp>

#include <string>
#include <string_view>

namespace mtqe {

// Diagnostics go to stderr as one JSON object per line so pipelines can
// grep them; stdout stays reserved for the report renderer.
enum class LogLevel { kDebug, kInfo, kWarn, kError };

void set_log_level(LogLevel level);
void log(LogLevel level, std::string_view msg,
         const nlohmann::json& fields = nlohmann::json::object());

inline void log_info(std::string_view msg,
                     const nlohmann::json& fields = nlohmann::json::object()) {
    log(LogLevel::kInfo, msg, fields);
}
inline void log_warn(std::string_view msg,
                     const nlohmann::json& fields = nlohmann::json::object()) {
    log(LogLevel::kWarn, msg, fields);
}
inline void log_error(std::string_view msg,
                      const nlohmann::json& fields = nlohmann::json::object()) {
    log(LogLevel::kError, msg, fields);
}

}  // namespace mtqe
