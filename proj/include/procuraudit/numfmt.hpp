#pragma once

#include <cstdio>
#include <string>

namespace procuraudit {

// All floating-point output goes through this: 17 significant digits is
// enough to round-trip a double, so artifacts are byte-stable across runs.
inline std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace procuraudit
