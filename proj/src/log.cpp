#include "mtqe/log.hpp"

#include <iostream>
#include <mutex>

namespace mtqe {

namespace {

LogLevel g_level = LogLevel::kInfo;
std::mutex g_mutex;

const char* level_name(LogLevel level) {
    switch (level) {
        case LogLevel::kDebug: return "debug";
        case LogLevel::kInfo: return "info";
        case LogLevel::kWarn: return "warn";
        case LogLevel::kError: return "error";
    }
    return "info";
}

}  // namespace

void set_log_level(LogLevel level) { g_level = level; }

void log(LogLevel level, std::string_view msg, const nlohmann::json& fields) {
    if (level < g_level) return;
    nlohmann::ordered_json line;
    line["level"] = level_name(level);
    line["msg"] = std::string(msg);
    if (fields.is_object()) {
        for (const auto& [k, v] : fields.items()) line[k] = v;
    }
    std::lock_guard<std::mutex> lock(g_mutex);
    std::cerr << line.dump() << "\n";
}

}  // namespace mtqe
