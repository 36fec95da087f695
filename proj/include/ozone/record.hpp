#pragma once

#include <cmath>
#include <cstdio>
#include <string>

namespace ozone {

// Shortest-ish stable rendering for key=value records: 10 significant digits,
// "inf"/"-inf"/"nan" for non-finite values.
inline std::string format_number(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", value);
    return buf;
}

} // namespace ozone
