#pragma once

// Stderr logging gated by the CTVBENCH_LOG env var (error|warn|info|debug).
// Logging never touches artifact content; it exists for humans only.

#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>
#include <string_view>

namespace ctv::log {

enum class Level { error = 0, warn = 1, info = 2, debug = 3 };

inline Level& threshold() {
    static Level level = [] {
        const char* env = std::getenv("CTVBENCH_LOG");
        if (!env) return Level::warn;
        const std::string_view v(env);
        if (v == "error") return Level::error;
        if (v == "info") return Level::info;
        if (v == "debug") return Level::debug;
        return Level::warn;
    }();
    return level;
}

inline std::mutex& mutex() {
    static std::mutex m;
    return m;
}

inline void emit(Level level, std::string_view tag, const std::string& msg) {
    if (level > threshold()) return;
    std::lock_guard<std::mutex> lock(mutex());
    std::cerr << "[" << tag << "] " << msg << "\n";
}

inline void error(const std::string& msg) { emit(Level::error, "error", msg); }
inline void warn(const std::string& msg) { emit(Level::warn, "warn", msg); }
inline void info(const std::string& msg) { emit(Level::info, "info", msg); }
inline void debug(const std::string& msg) { emit(Level::debug, "debug", msg); }

}  // namespace ctv::log
