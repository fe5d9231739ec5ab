#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include <json.hpp>

namespace rescast::metrics {

enum class Scale { Raw, Normalized };

std::string_view to_string(Scale scale);

struct EvaluationReport {
    double mae = 0.0;
    double mse = 0.0;
    double rmse = 0.0;
    double mape_percent = 0.0;
    std::optional<double> nrmse_mean;  // absent when |mean(actuals)| < epsilon
    std::size_t n = 0;
    std::size_t mape_skipped = 0;  // terms with |actual| < epsilon left out of MAPE
    std::optional<double> runtime_seconds;
    std::string model_name;
    Scale scale = Scale::Raw;
};

inline constexpr double kDefaultMapeEpsilon = 1e-8;

/// MAE, MSE, RMSE, MAPE and mean-normalized RMSE of `predictions` against
/// `actuals`.
EvaluationReport evaluate(std::span<const double> actuals, std::span<const double> predictions,
                          double mape_epsilon = kDefaultMapeEpsilon);

/// Flat object with keys mae, mse, rmse, mape_percent, nrmse_mean, n,
/// runtime_seconds, model_name, scale. Absent values become null.
nlohmann::ordered_json to_json(const EvaluationReport& report);

inline constexpr std::string_view kReportCsvHeader =
    "mae,mse,rmse,mape_percent,nrmse_mean,n,runtime_seconds,model_name,scale";

/// One CSV row in kReportCsvHeader order; absent values are empty fields.
std::string to_csv_row(const EvaluationReport& report);

struct DescriptiveStats {
    std::size_t count = 0;
    double mean = 0.0;
    double std = 0.0;  // n - 1 denominator
    double min = 0.0;
    double max = 0.0;
    double median = 0.0;
    std::optional<double> skewness;  // standardized third central moment
    std::optional<double> kurtosis;  // excess: normal -> 0
    std::optional<double> jarque_bera_statistic;
    std::optional<double> jarque_bera_p;
};

DescriptiveStats describe(std::span<const double> values);

nlohmann::ordered_json to_json(const DescriptiveStats& stats);

struct WelchResult {
    double t = 0.0;
    double p = 1.0;  // two-sided
    double df = 0.0;
};

/// Welch's unequal-variance t-test of mean(a) - mean(b).
WelchResult welch_t_test(std::span<const double> a, std::span<const double> b);

}  // namespace rescast::metrics
