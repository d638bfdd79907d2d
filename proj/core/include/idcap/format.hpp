#pragma once

#include <cstdio>
#include <string>

namespace idcap {

/// Fixed 17-significant-digit rendering so repeated runs emit byte-identical
/// CSV files. Doubles round-trip exactly at this precision.
inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace idcap
