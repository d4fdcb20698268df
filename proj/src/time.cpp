#include "loadcast/time.hpp"

#include "loadcast/error.hpp"

#include <cctype>
#include <cstdio>

namespace loadcast {

using namespace std::chrono;

CalendarFields calendar_fields(Timestamp t) {
    const sys_days day = floor<days>(t);
    const year_month_day ymd{day};
    const int doy = static_cast<int>((day - sys_days{ymd.year() / January / 1}).count()) + 1;
    return CalendarFields{
        .hour = static_cast<int>((t - day).count()),
        .day_of_week = static_cast<int>(weekday{day}.iso_encoding()) - 1,
        .day_of_year = doy,
        .month = static_cast<int>(static_cast<unsigned>(ymd.month())),
    };
}

namespace {

bool read_int(std::string_view s, std::size_t pos, std::size_t len, int& out) {
    if (pos + len > s.size()) return false;
    int v = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
        v = v * 10 + (s[i] - '0');
    }
    out = v;
    return true;
}

}  // namespace

sys_seconds parse_iso8601(std::string_view text) {
    const auto fail = [&] {
        return InvalidInput("malformed ISO-8601 timestamp '" + std::string(text) + "'");
    };
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
    if (!read_int(text, 0, 4, y) || text.size() < 13 || text[4] != '-' || !read_int(text, 5, 2, mo) ||
        text[7] != '-' || !read_int(text, 8, 2, d) || (text[10] != 'T' && text[10] != ' ') ||
        !read_int(text, 11, 2, h)) {
        throw fail();
    }
    std::size_t pos = 13;
    if (pos < text.size() && text[pos] == ':') {
        if (!read_int(text, pos + 1, 2, mi)) throw fail();
        pos += 3;
        if (pos < text.size() && text[pos] == ':') {
            if (!read_int(text, pos + 1, 2, sec)) throw fail();
            pos += 3;
        }
    }
    if (pos < text.size() && text[pos] == 'Z') ++pos;
    if (pos != text.size()) throw fail();

    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h > 23 || mi > 59 || sec > 59) throw fail();
    return sys_days{ymd} + hours{h} + minutes{mi} + seconds{sec};
}

Timestamp parse_hour(std::string_view text) {
    const sys_seconds t = parse_iso8601(text);
    const Timestamp aligned = floor<hours>(t);
    if (sys_seconds{aligned} != t) {
        throw InvalidInput("timestamp '" + std::string(text) + "' is not hour-aligned");
    }
    return aligned;
}

std::string format_iso8601(sys_seconds t) {
    const sys_days day = floor<days>(t);
    const year_month_day ymd{day};
    const hh_mm_ss hms{t - day};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                  static_cast<int>(hms.seconds().count()));
    return buf;
}

}  // namespace loadcast
