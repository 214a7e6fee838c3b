#pragma once

#include <cstdio>

namespace viewfusion {

enum class LogLevel { kError = 0, kInfo = 1, kDebug = 2 };

/// Current level, read once from VIEWFUSION_LOG (error|info|debug, default error).
LogLevel log_level();

}  // namespace viewfusion

#define VF_LOG_ERROR(...)                                     \
    do {                                                      \
        std::fprintf(stderr, "[error] " __VA_ARGS__);         \
        std::fprintf(stderr, "\n");                           \
    } while (0)

#define VF_LOG_INFO(...)                                                        \
    do {                                                                        \
        if (::viewfusion::log_level() >= ::viewfusion::LogLevel::kInfo) {       \
            std::fprintf(stderr, "[info] " __VA_ARGS__);                        \
            std::fprintf(stderr, "\n");                                         \
        }                                                                       \
    } while (0)

#define VF_LOG_DEBUG(...)                                                       \
    do {                                                                        \
        if (::viewfusion::log_level() >= ::viewfusion::LogLevel::kDebug) {      \
            std::fprintf(stderr, "[debug] " __VA_ARGS__);                       \
            std::fprintf(stderr, "\n");                                         \
        }                                                                       \
    } while (0)
