#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace loadcast {

/// Hour-aligned UTC instant.
using Timestamp = std::chrono::sys_time<std::chrono::hours>;

/// Calendar fields used by the generator and feature extraction.
struct CalendarFields {
    int hour;         // 0-23
    int day_of_week;  // 0 = Monday .. 6 = Sunday
    int day_of_year;  // 1-366
    int month;        // 1-12
};

CalendarFields calendar_fields(Timestamp t);

/// Parses `YYYY-MM-DDTHH[:MM[:SS]][Z]`. Throws InvalidInput on malformed text.
std::chrono::sys_seconds parse_iso8601(std::string_view text);

/// Parses and requires hour alignment.
Timestamp parse_hour(std::string_view text);

/// `2024-01-01T00:00:00Z`
std::string format_iso8601(std::chrono::sys_seconds t);
inline std::string format_iso8601(Timestamp t) {
    return format_iso8601(std::chrono::sys_seconds{t});
}

}  // namespace loadcast
