#include "flowsentry/timeutil.hpp"

#include <cstdio>
#include <ctime>

namespace flowsentry {

std::string format_timestamp(TimestampMs t) {
    TimestampMs secs = t / 1000;
    TimestampMs ms = t % 1000;
    if (ms < 0) {
        ms += 1000;
        --secs;
    }
    std::time_t tt = static_cast<std::time_t>(secs);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d %02d:%02d:%02d.%03d", tm.tm_year + 1900,
                  tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec,
                  static_cast<int>(ms));
    return buf;
}

std::optional<TimestampMs> parse_timestamp(std::string_view text) {
    // Fixed-width "YYYY-MM-DD HH:MM:SS.mmm"; a 'T' separator is tolerated.
    if (text.size() != 23) return std::nullopt;
    auto digits = [&](std::size_t pos, std::size_t n, int& out) {
        out = 0;
        for (std::size_t i = pos; i < pos + n; ++i) {
            char c = text[i];
            if (c < '0' || c > '9') return false;
            out = out * 10 + (c - '0');
        }
        return true;
    };
    int year, mon, day, hour, min, sec, ms;
    if (!digits(0, 4, year) || text[4] != '-' || !digits(5, 2, mon) || text[7] != '-' ||
        !digits(8, 2, day) || (text[10] != ' ' && text[10] != 'T') || !digits(11, 2, hour) ||
        text[13] != ':' || !digits(14, 2, min) || text[16] != ':' || !digits(17, 2, sec) ||
        text[19] != '.' || !digits(20, 3, ms))
        return std::nullopt;
    if (mon < 1 || mon > 12 || day < 1 || day > 31 || hour > 23 || min > 59 || sec > 60)
        return std::nullopt;
    std::tm tm{};
    tm.tm_year = year - 1900;
    tm.tm_mon = mon - 1;
    tm.tm_mday = day;
    tm.tm_hour = hour;
    tm.tm_min = min;
    tm.tm_sec = sec;
    std::time_t secs = timegm(&tm);
    if (secs == static_cast<std::time_t>(-1)) return std::nullopt;
    return static_cast<TimestampMs>(secs) * 1000 + ms;
}

}  // namespace flowsentry
