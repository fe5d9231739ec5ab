#include "rescast/data_pipeline.hpp"

#include "rescast/error.hpp"
#include "rescast/text.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace rescast {

namespace {

struct Row {
    Date date;
    double close;
    std::size_t line;
};

std::size_t require_column(const std::vector<std::string_view>& header, std::string_view name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
        throw Error(ErrorKind::Schema, "CSV header has no '" + std::string(name) + "' column");
    }
    return static_cast<std::size_t>(it - header.begin());
}

double median_of(std::vector<double> values) {
    const std::size_t n = values.size();
    std::sort(values.begin(), values.end());
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

// Robust z-scores |x - median| / (1.4826 * MAD). When more than half the
// points coincide MAD is zero and the mean absolute deviation (scaled by
// sqrt(pi/2)) stands in; a fully constant sample flags nothing.
void mask_outliers(std::vector<double>& values, double k) {
    std::vector<double> present;
    for (double v : values) {
        if (!is_missing(v)) {
            present.push_back(v);
        }
    }
    const double center = median_of(present);
    std::vector<double> deviations;
    deviations.reserve(present.size());
    for (double v : present) {
        deviations.push_back(std::abs(v - center));
    }
    double scale = 1.4826 * median_of(deviations);
    if (scale == 0.0) {
        scale = 1.2533 * std::accumulate(deviations.begin(), deviations.end(), 0.0) /
                static_cast<double>(deviations.size());
    }
    if (scale == 0.0) {
        return;
    }
    for (double& v : values) {
        if (!is_missing(v) && std::abs(v - center) / scale > k) {
            v = kMissing;
        }
    }
}

}  // namespace

Series parse_ohlc_csv(std::string_view text) {
    if (text.starts_with("\xEF\xBB\xBF")) {
        text.remove_prefix(3);
    }
    std::vector<std::string_view> lines = text::split(text, '\n');
    std::size_t header_line = 0;
    while (header_line < lines.size() && text::trim(lines[header_line]).empty()) {
        ++header_line;
    }
    if (header_line == lines.size()) {
        throw Error(ErrorKind::Schema, "CSV input is empty; expected a header with Date and Close");
    }
    std::vector<std::string_view> header = text::split(text::trim(lines[header_line]), ',');
    for (auto& field : header) {
        field = text::trim(field);
    }
    const std::size_t date_col = require_column(header, "Date");
    const std::size_t close_col = require_column(header, "Close");

    std::vector<Row> rows;
    for (std::size_t i = header_line + 1; i < lines.size(); ++i) {
        const std::string_view line = text::trim(lines[i]);
        if (line.empty()) {
            continue;
        }
        const std::size_t line_no = i + 1;
        const auto fields = text::split(line, ',');
        if (fields.size() <= std::max(date_col, close_col)) {
            throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": expected " +
                                              std::to_string(header.size()) + " fields, found " +
                                              std::to_string(fields.size()));
        }
        Row row{};
        row.line = line_no;
        const std::string_view date_field = text::trim(fields[date_col]);
        if (!parse_iso_date(date_field, row.date)) {
            throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": bad date '" +
                                              std::string(date_field) + "'");
        }
        const std::string_view close_field = text::trim(fields[close_col]);
        if (close_field.empty() || close_field == "null") {
            row.close = kMissing;
        } else {
            const auto value = text::parse_double(close_field);
            if (!value || !std::isfinite(*value)) {
                throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) +
                                                  ": bad Close value '" + std::string(close_field) +
                                                  "'");
            }
            row.close = *value;
        }
        rows.push_back(row);
    }

    std::stable_sort(rows.begin(), rows.end(),
                     [](const Row& a, const Row& b) { return a.date < b.date; });
    Series series;
    series.dates.reserve(rows.size());
    series.values.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (i > 0 && rows[i].date == rows[i - 1].date) {
            throw Error(ErrorKind::Parse, "line " + std::to_string(rows[i].line) +
                                              ": duplicate date " + format_iso_date(rows[i].date));
        }
        series.dates.push_back(rows[i].date);
        series.values.push_back(rows[i].close);
    }
    return series;
}

std::string serialize_ohlc_csv(const Series& series) {
    std::ostringstream out;
    out << "Date,Open,High,Low,Close,Adj Close,Volume\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
        const double v = series.values[i];
        const std::string price = is_missing(v) ? "null" : text::format_double(v);
        out << format_iso_date(series.dates[i]) << ',' << price << ',' << price << ',' << price
            << ',' << price << ',' << price << ",0\n";
    }
    return out.str();
}

Series clean_series(const Series& raw, OutlierPolicy policy) {
    const auto present = static_cast<std::size_t>(
        std::count_if(raw.values.begin(), raw.values.end(), [](double v) { return !is_missing(v); }));
    if (present == 0) {
        throw Error(ErrorKind::EmptySeries, "series has no non-missing values");
    }
    if (present < 2) {
        throw Error(ErrorKind::InsufficientData, "cleaning needs at least 2 non-missing values");
    }

    Series out = raw;
    if (policy.kind == OutlierPolicy::Kind::ZScore) {
        mask_outliers(out.values, policy.k);
    }
    const auto first = std::find_if(out.values.begin(), out.values.end(),
                                    [](double v) { return !is_missing(v); });
    std::fill(out.values.begin(), first, *first);
    for (auto it = first; it != out.values.end(); ++it) {
        if (is_missing(*it)) {
            *it = *(it - 1);
        }
    }
    return out;
}

NormalizationParams fit_normalization(std::span<const double> values) {
    if (values.empty()) {
        throw Error(ErrorKind::EmptySeries, "cannot normalize an empty series");
    }
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    if (!(*hi > *lo)) {
        throw Error(ErrorKind::DegenerateRange,
                    "series is constant (min == max == " + text::format_double(*lo) + ")");
    }
    return {*lo, *hi};
}

std::vector<double> apply_normalization(std::span<const double> values,
                                        const NormalizationParams& params) {
    std::vector<double> out;
    out.reserve(values.size());
    const double range = params.range();
    for (double v : values) {
        out.push_back((v - params.y_min) / range);
    }
    return out;
}

std::pair<Series, NormalizationParams> normalize(const Series& series) {
    const NormalizationParams params = fit_normalization(series.values);
    Series out{series.dates, apply_normalization(series.values, params)};
    return {std::move(out), params};
}

std::vector<double> denormalize(std::span<const double> values, const NormalizationParams& params) {
    if (!(params.y_max > params.y_min)) {
        throw Error(ErrorKind::DegenerateRange, "normalization params need y_max > y_min");
    }
    std::vector<double> out;
    out.reserve(values.size());
    const double range = params.range();
    for (double v : values) {
        out.push_back(v * range + params.y_min);
    }
    return out;
}

std::size_t split_index(std::size_t n, SplitSpec spec) {
    if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
        throw Error(ErrorKind::Config, "split.train_fraction must lie in (0, 1), got " +
                                           text::format_double(spec.train_fraction));
    }
    return static_cast<std::size_t>(std::floor(spec.train_fraction * static_cast<double>(n)));
}

std::pair<Series, Series> split(const Series& series, SplitSpec spec) {
    const std::size_t n = series.size();
    const std::size_t cut = split_index(n, spec);
    if (n < 4) {
        throw Error(ErrorKind::InsufficientData,
                    "split needs at least 4 points, got " + std::to_string(n));
    }
    if (cut == 0 || cut == n) {
        throw Error(ErrorKind::Config, "train fraction " + text::format_double(spec.train_fraction) +
                                           " leaves an empty partition for n = " +
                                           std::to_string(n));
    }
    const auto at = [&](const auto& v, std::size_t b, std::size_t e) {
        return std::vector(v.begin() + static_cast<std::ptrdiff_t>(b),
                           v.begin() + static_cast<std::ptrdiff_t>(e));
    };
    Series train{at(series.dates, 0, cut), at(series.values, 0, cut)};
    Series test{at(series.dates, cut, n), at(series.values, cut, n)};
    return {std::move(train), std::move(test)};
}

SupervisedSet make_supervised(std::span<const double> series, std::size_t lag) {
    if (lag == 0) {
        throw Error(ErrorKind::Config, "lag must be a positive integer");
    }
    if (series.size() <= lag) {
        throw Error(ErrorKind::InsufficientData, "series of length " +
                                                     std::to_string(series.size()) +
                                                     " is too short for lag " + std::to_string(lag));
    }
    SupervisedSet set;
    set.lag = lag;
    set.inputs.assign(series.begin(), series.end() - static_cast<std::ptrdiff_t>(lag));
    set.targets.assign(series.begin() + static_cast<std::ptrdiff_t>(lag), series.end());
    return set;
}

SupervisedSet make_supervised(const Series& series, std::size_t lag) {
    return make_supervised(std::span<const double>(series.values), lag);
}

}  // namespace rescast
