#include "carbonsched/time.hpp"

#include <cctype>
#include <cstdio>
#include <stdexcept>

namespace carbonsched {

namespace {

// Howard Hinnant's days_from_civil.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, std::int64_t& y, unsigned& m, unsigned& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp < 10 ? mp + 3 : mp - 9;
    y += m <= 2;
}

int read_digits(std::string_view s, std::size_t& pos, std::size_t n) {
    if (pos + n > s.size()) throw std::invalid_argument("truncated timestamp");
    int v = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const char c = s[pos + i];
        if (!std::isdigit(static_cast<unsigned char>(c))) throw std::invalid_argument("non-digit in timestamp");
        v = v * 10 + (c - '0');
    }
    pos += n;
    return v;
}

void expect(std::string_view s, std::size_t& pos, char c) {
    if (pos >= s.size() || s[pos] != c) throw std::invalid_argument("malformed timestamp");
    ++pos;
}

}  // namespace

UnixSeconds parse_iso8601(std::string_view text) {
    try {
        std::size_t pos = 0;
        const int year = read_digits(text, pos, 4);
        expect(text, pos, '-');
        const int month = read_digits(text, pos, 2);
        expect(text, pos, '-');
        const int day = read_digits(text, pos, 2);
        if (pos >= text.size() || (text[pos] != 'T' && text[pos] != ' ')) throw std::invalid_argument("missing time");
        ++pos;
        const int hour = read_digits(text, pos, 2);
        expect(text, pos, ':');
        const int minute = read_digits(text, pos, 2);
        int second = 0;
        if (pos < text.size() && text[pos] == ':') {
            ++pos;
            second = read_digits(text, pos, 2);
            if (pos < text.size() && text[pos] == '.') {
                ++pos;
                while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
            }
        }
        if (month < 1 || month > 12 || day < 1 || day > 31 || hour > 23 || minute > 59 || second > 60)
            throw std::invalid_argument("timestamp field out of range");

        UnixSeconds offset = 0;
        if (pos >= text.size()) throw std::invalid_argument("missing UTC offset");
        if (text[pos] == 'Z') {
            ++pos;
        } else if (text[pos] == '+' || text[pos] == '-') {
            const int sign = text[pos] == '-' ? -1 : 1;
            ++pos;
            const int oh = read_digits(text, pos, 2);
            if (pos < text.size() && text[pos] == ':') ++pos;
            const int om = read_digits(text, pos, 2);
            offset = sign * (oh * 3600 + om * 60);
        } else {
            throw std::invalid_argument("malformed UTC offset");
        }
        if (pos != text.size()) throw std::invalid_argument("trailing characters");

        const std::int64_t days = days_from_civil(year, static_cast<unsigned>(month), static_cast<unsigned>(day));
        return days * 86400 + hour * 3600 + minute * 60 + second - offset;
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument("invalid ISO-8601 timestamp '" + std::string(text) + "': " + e.what());
    }
}

std::string format_iso8601(UnixSeconds t) {
    std::int64_t days = t / 86400;
    std::int64_t rem = t % 86400;
    if (rem < 0) {
        rem += 86400;
        --days;
    }
    std::int64_t y = 0;
    unsigned m = 0, d = 0;
    civil_from_days(days, y, m, d);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04lld-%02u-%02uT%02lld:%02lld:%02lldZ", static_cast<long long>(y), m, d,
                  static_cast<long long>(rem / 3600), static_cast<long long>(rem / 60 % 60),
                  static_cast<long long>(rem % 60));
    return buf;
}

}  // namespace carbonsched
