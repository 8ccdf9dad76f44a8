#pragma once

#include <cstdio>
#include <string>
#include <string_view>

namespace mcerr {

inline constexpr std::string_view version_string = "0.1.0";

// printf-style %g with a chosen number of significant digits.
// JSON output uses 17 (round-trip safe), CSV uses 12.
inline std::string num_str(double v, int significant_digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", significant_digits, v);
    return buf;
}

} // namespace mcerr
