#pragma once

#define CAUSALCAST_VERSION_MAJOR 0
#define CAUSALCAST_VERSION_MINOR 1
#define CAUSALCAST_VERSION_PATCH 0

namespace causalcast {

inline constexpr const char* version_string() {
    return "0.1.0";
}

} // namespace causalcast
