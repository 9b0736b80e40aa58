#include "cchedge/dates.hpp"

#include "cchedge/errors.hpp"

#include <cctype>
#include <cstdio>

namespace cchedge {

Date parse_iso_date(std::string_view text) {
    auto bad = [&] { return ParseError("invalid ISO-8601 date '" + std::string(text) + "'"); };
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') throw bad();
    for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u}) {
        if (!std::isdigit(static_cast<unsigned char>(text[i]))) throw bad();
    }
    auto num = [&](std::size_t pos, std::size_t len) {
        int v = 0;
        for (std::size_t i = pos; i < pos + len; ++i) v = 10 * v + (text[i] - '0');
        return v;
    };
    const std::chrono::year_month_day ymd{std::chrono::year{num(0, 4)},
                                          std::chrono::month{static_cast<unsigned>(num(5, 2))},
                                          std::chrono::day{static_cast<unsigned>(num(8, 2))}};
    if (!ymd.ok()) throw bad();
    return Date{ymd};
}

std::string format_iso_date(Date d) {
    const std::chrono::year_month_day ymd{d};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

double year_fraction(Date from, Date to) { return static_cast<double>((to - from).count()) / 365.0; }

}  // namespace cchedge
