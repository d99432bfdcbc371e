#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace flowsentry {

// Milliseconds since the Unix epoch / millisecond durations. NetFlow v5
// exports carry millisecond resolution, so nothing finer is ever needed.
using TimestampMs = std::int64_t;
using DurationMs = std::int64_t;

inline constexpr DurationMs kSecondMs = 1000;
inline constexpr DurationMs kMinuteMs = 60 * kSecondMs;

// "YYYY-MM-DD HH:MM:SS.mmm", UTC.
std::string format_timestamp(TimestampMs t);
std::optional<TimestampMs> parse_timestamp(std::string_view text);

// Start of the window-grid cell containing t (grid aligned to the epoch).
constexpr TimestampMs window_start_for(TimestampMs t, DurationMs window_len) {
    TimestampMs q = t / window_len;
    if (t % window_len != 0 && t < 0) --q;
    return q * window_len;
}

}  // namespace flowsentry
