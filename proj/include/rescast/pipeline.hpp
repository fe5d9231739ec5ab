#pragma once

#include "rescast/data_pipeline.hpp"
#include "rescast/esn.hpp"
#include "rescast/lstm.hpp"
#include "rescast/fetch.hpp"
#include "rescast/metrics.hpp"
#include "rescast/run_config.hpp"

#include <json.hpp>

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace rescast {

/// Cleaned series, its normalization and the chronological split, shared
/// verbatim by every model in a run.
struct PreparedData {
    Series series;
    NormalizationParams params;
    std::vector<double> normalized;
    std::size_t split_at = 0;
    std::size_t lag = 1;
    SupervisedSet train_set;

    [[nodiscard]] std::size_t test_size() const { return series.size() - split_at; }
    /// Inputs x(0) .. x(n - 1 - lag), one per available target.
    [[nodiscard]] std::span<const double> all_inputs() const;
    [[nodiscard]] std::span<const double> test_actuals_raw() const;
    [[nodiscard]] std::span<const double> test_actuals_normalized() const;
    [[nodiscard]] std::span<const Date> test_dates() const;
};

/// Normalizes with full-series or train-only min/max, splits at
/// floor(train_fraction * n) and builds the training pairs.
PreparedData prepare_data(const Series& cleaned, SplitSpec split, std::size_t lag,
                          NormalizationMode mode);

/// Reads data.path or fetches data.symbol (cache dir overridable through
/// RESCAST_CACHE_DIR), then applies the configured cleaning.
Series load_series(const RunConfig& config);

FetchRequest make_fetch_request(const RunConfig& config);

/// Normalized-scale predictions for each test target. One-step mode replays
/// the whole input history from a zero state; free-running mode warms up on
/// the training inputs and then feeds predictions back.
std::vector<double> esn_test_predictions(esn::EsnModel& model, const PreparedData& data,
                                         PredictionMode mode);
std::vector<double> lstm_test_predictions(lstm::LstmModel& model, const PreparedData& data,
                                          PredictionMode mode);
/// ŷ(t + lag) = y(t).
std::vector<double> persistence_test_predictions(const PreparedData& data);

struct CompareOutcome {
    nlohmann::ordered_json report;  // deterministic for a fixed config
    nlohmann::ordered_json timing;  // wall-clock fit times
    std::vector<double> esn_raw;    // test-window predictions, raw scale
    std::vector<double> lstm_raw;
    std::vector<metrics::EvaluationReport> evaluations;
    std::vector<double> lstm_loss_history;
};

/// Trains both models on the same split, evaluates them on the test window
/// and runs a Welch t-test on their absolute errors. A divergence in either
/// model is rethrown naming that model.
CompareOutcome run_compare(const RunConfig& config, const PreparedData& data);

/// compare_report.json, timing.json, metrics.csv, per-model prediction CSVs,
/// lstm_loss.csv and the three SVG charts.
void write_compare_outputs(const CompareOutcome& outcome, const PreparedData& data,
                           const std::filesystem::path& out_dir);

std::string predictions_csv(std::span<const Date> dates, std::span<const double> actual,
                            std::span<const double> predicted);
std::string loss_csv(std::span<const double> losses);

std::string fingerprint_doubles(std::span<const double> values);

}  // namespace rescast
