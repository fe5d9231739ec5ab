#pragma once

#include "rescast/series.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace rescast {

/// Min/max pair used by the min-max scaling; normalization needs y_max > y_min.
struct NormalizationParams {
    double y_min = 0.0;
    double y_max = 1.0;

    [[nodiscard]] double range() const { return y_max - y_min; }
};

struct SplitSpec {
    double train_fraction = 0.75;
};

/// One-step-ahead (or `lag`-ahead) supervised pairs: targets[i] = series[i + lag].
struct SupervisedSet {
    std::vector<double> inputs;
    std::vector<double> targets;
    std::size_t lag = 1;

    [[nodiscard]] std::size_t size() const { return inputs.size(); }
};

struct OutlierPolicy {
    enum class Kind { None, ZScore };
    Kind kind = Kind::None;
    double k = 3.0;

    static OutlierPolicy none() { return {}; }
    static OutlierPolicy zscore(double k) { return {Kind::ZScore, k}; }
};

/// Reads the `Date,Open,High,Low,Close,Adj Close,Volume` layout; only Date and
/// Close are consumed. Rows come back in ascending date order. Empty or `null`
/// Close fields become kMissing.
Series parse_ohlc_csv(std::string_view text);

/// Writes a series in the seven-column layout (Close repeated in the price
/// columns, missing values as `null`). parse_ohlc_csv inverts it exactly.
std::string serialize_ohlc_csv(const Series& series);

/// Forward-fills missing values (leading gap back-filled from the first
/// observation). Under a z-score policy, points with |x - mean| / std > k are
/// dropped to missing first.
Series clean_series(const Series& raw, OutlierPolicy policy = OutlierPolicy::none());

std::pair<Series, NormalizationParams> normalize(const Series& series);

/// Computes the min/max of `values`; throws DegenerateRange when max == min.
NormalizationParams fit_normalization(std::span<const double> values);
std::vector<double> apply_normalization(std::span<const double> values,
                                        const NormalizationParams& params);

std::vector<double> denormalize(std::span<const double> values, const NormalizationParams& params);

std::pair<Series, Series> split(const Series& series, SplitSpec spec = {});

/// Index of the first test point: floor(train_fraction * n).
std::size_t split_index(std::size_t n, SplitSpec spec);

SupervisedSet make_supervised(std::span<const double> series, std::size_t lag = 1);
SupervisedSet make_supervised(const Series& series, std::size_t lag = 1);

}  // namespace rescast
