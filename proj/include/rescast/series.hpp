#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

namespace rescast {

using Date = std::chrono::sys_days;

/// Parses `YYYY-MM-DD`; returns false on malformed or impossible dates.
bool parse_iso_date(std::string_view text, Date& out);
std::string format_iso_date(Date date);

/// Next Monday-to-Friday date after `date`.
Date next_business_day(Date date);

/// Seconds since the Unix epoch at 00:00 UTC of `date`.
long long to_epoch_seconds(Date date);

/// Marker for a missing observation prior to cleaning.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double value) { return std::isnan(value); }

/// Timestamped univariate price sequence.
struct Series {
    std::vector<Date> dates;
    std::vector<double> values;

    [[nodiscard]] std::size_t size() const { return values.size(); }
    [[nodiscard]] bool empty() const { return values.empty(); }
};

}  // namespace rescast
