#include "viewfusion/log.hpp"

#include <cstdlib>
#include <cstring>

namespace viewfusion {

LogLevel log_level() {
    static const LogLevel level = []() {
        const char* env = std::getenv("VIEWFUSION_LOG");
        if (env == nullptr) return LogLevel::kError;
        if (std::strcmp(env, "debug") == 0) return LogLevel::kDebug;
        if (std::strcmp(env, "info") == 0) return LogLevel::kInfo;
        return LogLevel::kError;
    }();
    return level;
}

}  // namespace viewfusion
