#include "rockmass/common.hpp"

#include <charconv>
#include <cstdio>

namespace rockmass {

std::string format_double(double v) {
    if (v == static_cast<long long>(v) && std::abs(v) < 1e15) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(v));
        return buf;
    }
    // shortest representation that parses back to the same double
    char buf[40];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, end);
}

}  // namespace rockmass
