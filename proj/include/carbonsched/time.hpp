#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace carbonsched {

// Seconds since 1970-01-01T00:00:00Z.
using UnixSeconds = std::int64_t;

inline constexpr UnixSeconds kSecondsPerHour = 3600;

// Parses "YYYY-MM-DDTHH:MM[:SS[.fff]]" followed by "Z", "+HH:MM" or "-HH:MM".
// A space may replace the 'T'. A missing offset is rejected: all inputs must be UTC or
// carry an explicit offset.
UnixSeconds parse_iso8601(std::string_view text);

// Formats as "YYYY-MM-DDTHH:MM:SSZ".
std::string format_iso8601(UnixSeconds t);

inline UnixSeconds floor_to_hour(UnixSeconds t) {
    UnixSeconds r = t % kSecondsPerHour;
    if (r < 0) r += kSecondsPerHour;
    return t - r;
}

}  // namespace carbonsched
