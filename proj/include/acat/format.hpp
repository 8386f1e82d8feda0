#pragma once

#include <cstdio>
#include <string>

namespace acat {

// Locale-independent, reproducible double formatting for CSV output.
inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

}  // namespace acat
