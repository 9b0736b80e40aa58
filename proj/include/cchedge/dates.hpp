#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace cchedge {

using Date = std::chrono::sys_days;

/// Strict YYYY-MM-DD. Throws ParseError.
Date parse_iso_date(std::string_view text);
std::string format_iso_date(Date d);

/// ACT/365 year fraction.
double year_fraction(Date from, Date to);

}  // namespace cchedge
