#include "rescast/pipeline.hpp"

#include "rescast/chart.hpp"
#include "rescast/error.hpp"
#include "rescast/fetch.hpp"
#include "rescast/metrics.hpp"
#include "rescast/text.hpp"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>

namespace rescast {

namespace {

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::Fetch, "cannot read data file " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) {
        throw Error(ErrorKind::Config, "cannot write " + path.string());
    }
}

std::vector<double> tail(const std::vector<double>& v, std::size_t from) {
    return {v.begin() + static_cast<std::ptrdiff_t>(from), v.end()};
}

template <typename Fn>
auto naming_divergence(std::string_view model, Fn&& fn) {
    try {
        return fn();
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::Divergence) {
            throw Error(ErrorKind::Divergence, std::string(model) + ": " + e.what());
        }
        throw;
    }
}

std::vector<double> abs_errors(std::span<const double> actual, std::span<const double> predicted) {
    std::vector<double> out;
    out.reserve(actual.size());
    for (std::size_t i = 0; i < actual.size(); ++i) {
        out.push_back(std::abs(actual[i] - predicted[i]));
    }
    return out;
}

std::string winner(std::optional<double> esn_value, std::optional<double> lstm_value) {
    if (!esn_value || !lstm_value) {
        return "n/a";
    }
    if (*esn_value < *lstm_value) {
        return "esn";
    }
    if (*lstm_value < *esn_value) {
        return "lstm";
    }
    return "tie";
}

}  // namespace

std::span<const double> PreparedData::all_inputs() const {
    return std::span<const double>(normalized).first(normalized.size() - lag);
}

std::span<const double> PreparedData::test_actuals_raw() const {
    return std::span<const double>(series.values).subspan(split_at);
}

std::span<const double> PreparedData::test_actuals_normalized() const {
    return std::span<const double>(normalized).subspan(split_at);
}

std::span<const Date> PreparedData::test_dates() const {
    return std::span<const Date>(series.dates).subspan(split_at);
}

PreparedData prepare_data(const Series& cleaned, SplitSpec split_spec, std::size_t lag,
                          NormalizationMode mode) {
    const auto [train, test] = split(cleaned, split_spec);
    PreparedData data;
    data.series = cleaned;
    data.split_at = train.size();
    data.lag = lag;
    data.params = fit_normalization(mode == NormalizationMode::Full
                                        ? std::span<const double>(cleaned.values)
                                        : std::span<const double>(train.values));
    data.normalized = apply_normalization(cleaned.values, data.params);
    data.train_set =
        make_supervised(std::span<const double>(data.normalized).first(data.split_at), lag);
    return data;
}

FetchRequest make_fetch_request(const RunConfig& config) {
    FetchRequest request;
    request.symbol = config.data_symbol.value_or("");
    request.start = config.data_start;
    request.end = config.data_end;
    request.endpoint = config.data_endpoint;
    request.cache_dir = config.cache_dir;
    if (const char* env = std::getenv("RESCAST_CACHE_DIR"); env != nullptr && *env != '\0') {
        request.cache_dir = env;
    }
    return request;
}

Series load_series(const RunConfig& config) {
    Series raw;
    if (config.data_path) {
        raw = parse_ohlc_csv(read_text_file(*config.data_path));
    } else {
        FetchResult fetched = fetch_history(make_fetch_request(config));
        if (fetched.stale) {
            std::clog << "warning: endpoint unreachable; using cached " << fetched.cache_file.string()
                      << '\n';
        }
        raw = std::move(fetched.series);
    }
    return clean_series(raw, config.outliers);
}

std::vector<double> esn_test_predictions(esn::EsnModel& model, const PreparedData& data,
                                         PredictionMode mode) {
    model.reset_state();
    if (mode == PredictionMode::OneStep) {
        return tail(model.predict_one_step(data.all_inputs()), data.split_at - data.lag);
    }
    const auto history = std::span<const double>(data.normalized).first(data.split_at);
    model.predict_one_step(history.first(history.size() - 1));
    return model.predict_free_running(history.back(), data.test_size());
}

std::vector<double> lstm_test_predictions(lstm::LstmModel& model, const PreparedData& data,
                                          PredictionMode mode) {
    if (mode == PredictionMode::OneStep) {
        return tail(lstm::lstm_predict(model, data.all_inputs()), data.split_at - data.lag);
    }
    const auto history = std::span<const double>(data.normalized).first(data.split_at);
    return lstm::lstm_free_run(model, history.first(history.size() - 1), history.back(),
                               data.test_size());
}

std::vector<double> persistence_test_predictions(const PreparedData& data) {
    const auto inputs = data.all_inputs();
    return {inputs.begin() + static_cast<std::ptrdiff_t>(data.split_at - data.lag), inputs.end()};
}

std::string fingerprint_doubles(std::span<const double> values) {
    return fnv1a_hex(std::string_view(reinterpret_cast<const char*>(values.data()),
                                      values.size_bytes()));
}

CompareOutcome run_compare(const RunConfig& config, const PreparedData& data) {
    CompareOutcome out;
    nlohmann::ordered_json fingerprints;

    const SupervisedSet& esn_train = data.train_set;
    fingerprints["esn_train_inputs"] = fingerprint_doubles(esn_train.inputs);
    fingerprints["esn_train_targets"] = fingerprint_doubles(esn_train.targets);
    esn::EsnModel esn_model = esn::EsnModel::build(config.reservoir);
    const FitReport esn_fit =
        naming_divergence("esn", [&] { return esn_model.fit_readout(esn_train); });
    const std::vector<double> esn_norm = naming_divergence(
        "esn", [&] { return esn_test_predictions(esn_model, data, config.prediction_mode); });

    const SupervisedSet& lstm_train = data.train_set;
    fingerprints["lstm_train_inputs"] = fingerprint_doubles(lstm_train.inputs);
    fingerprints["lstm_train_targets"] = fingerprint_doubles(lstm_train.targets);
    lstm::LstmFit lstm_result =
        naming_divergence("lstm", [&] { return lstm::lstm_fit(config.lstm, lstm_train); });
    const std::vector<double> lstm_norm = naming_divergence("lstm", [&] {
        return lstm_test_predictions(lstm_result.model, data, config.prediction_mode);
    });
    fingerprints["test_actuals"] = fingerprint_doubles(data.test_actuals_normalized());

    const std::vector<double> persistence_norm = persistence_test_predictions(data);
    out.esn_raw = denormalize(esn_norm, data.params);
    out.lstm_raw = denormalize(lstm_norm, data.params);
    const std::vector<double> persistence_raw = denormalize(persistence_norm, data.params);
    out.lstm_loss_history = lstm_result.report.loss_history;

    std::vector<metrics::Scale> scales;
    if (config.scale != ScaleSelection::Normalized) {
        scales.push_back(metrics::Scale::Raw);
    }
    if (config.scale != ScaleSelection::Raw) {
        scales.push_back(metrics::Scale::Normalized);
    }
    const metrics::Scale primary = scales.front();

    nlohmann::ordered_json evaluations = nlohmann::ordered_json::array();
    nlohmann::ordered_json skipped;
    metrics::EvaluationReport esn_primary;
    metrics::EvaluationReport lstm_primary;
    for (metrics::Scale scale : scales) {
        const bool raw = scale == metrics::Scale::Raw;
        const auto actual = raw ? data.test_actuals_raw() : data.test_actuals_normalized();
        // MAPE's epsilon is specified on the raw scale.
        const double eps = raw ? config.mape_epsilon : config.mape_epsilon / data.params.range();
        const auto add = [&](const std::string& name, const std::vector<double>& predicted,
                             std::optional<double> seconds) {
            metrics::EvaluationReport r = metrics::evaluate(actual, predicted, eps);
            r.model_name = name;
            r.scale = scale;
            nlohmann::ordered_json j = metrics::to_json(r);
            j["runtime_seconds"] = nullptr;  // wall clock lives in timing.json
            evaluations.push_back(j);
            skipped[name + "/" + std::string(metrics::to_string(scale))] = r.mape_skipped;
            r.runtime_seconds = seconds;
            out.evaluations.push_back(r);
            return r;
        };
        const auto e = add("esn", raw ? out.esn_raw : esn_norm, esn_fit.train_seconds);
        const auto l = add("lstm", raw ? out.lstm_raw : lstm_norm, lstm_result.report.train_seconds);
        add("persistence", raw ? persistence_raw : persistence_norm, std::nullopt);
        if (scale == primary) {
            esn_primary = e;
            lstm_primary = l;
        }
    }

    const bool raw_primary = primary == metrics::Scale::Raw;
    const auto actual = raw_primary ? data.test_actuals_raw() : data.test_actuals_normalized();
    const auto welch = metrics::welch_t_test(abs_errors(actual, raw_primary ? out.esn_raw : esn_norm),
                                             abs_errors(actual, raw_primary ? out.lstm_raw : lstm_norm));

    nlohmann::ordered_json& report = out.report;
    report["config_fingerprint"] = config.fingerprint();
    report["prediction_mode"] =
        config.prediction_mode == PredictionMode::OneStep ? "one-step" : "free-running";
    report["primary_scale"] = std::string(metrics::to_string(primary));
    nlohmann::ordered_json& d = report["data"];
    d["n"] = data.series.size();
    d["train"] = data.split_at;
    d["test"] = data.test_size();
    d["first_date"] = format_iso_date(data.series.dates.front());
    d["first_test_date"] = format_iso_date(data.series.dates[data.split_at]);
    d["last_date"] = format_iso_date(data.series.dates.back());
    d["normalization"] = {
        {"mode", config.normalization == NormalizationMode::Full ? "full" : "train-only"},
        {"y_min", data.params.y_min},
        {"y_max", data.params.y_max}};
    d["describe"] = metrics::to_json(metrics::describe(data.series.values));
    d["fingerprints"] = fingerprints;
    report["evaluations"] = evaluations;
    report["mape_skipped"] = skipped;
    report["welch_abs_errors"] = {
        {"a", "esn"}, {"b", "lstm"}, {"t", welch.t}, {"p", welch.p}, {"df", welch.df}};
    report["winners"] = {
        {"mae", winner(esn_primary.mae, lstm_primary.mae)},
        {"mse", winner(esn_primary.mse, lstm_primary.mse)},
        {"rmse", winner(esn_primary.rmse, lstm_primary.rmse)},
        {"mape_percent", winner(esn_primary.mape_percent, lstm_primary.mape_percent)},
        {"nrmse_mean", winner(esn_primary.nrmse_mean, lstm_primary.nrmse_mean)}};

    out.timing = {{"esn_fit_seconds", esn_fit.train_seconds},
                  {"lstm_fit_seconds", lstm_result.report.train_seconds},
                  {"faster", winner(esn_fit.train_seconds, lstm_result.report.train_seconds)}};
    return out;
}

std::string predictions_csv(std::span<const Date> dates, std::span<const double> actual,
                            std::span<const double> predicted) {
    std::string out = "date,actual,predicted\n";
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        out += format_iso_date(dates[i]);
        out += ',';
        if (i < actual.size() && !is_missing(actual[i])) {
            out += text::format_double(actual[i]);
        }
        out += ',';
        out += text::format_double(predicted[i]);
        out += '\n';
    }
    return out;
}

std::string loss_csv(std::span<const double> losses) {
    std::string out = "epoch,loss\n";
    for (std::size_t e = 0; e < losses.size(); ++e) {
        out += std::to_string(e) + ',' + text::format_double(losses[e]) + '\n';
    }
    return out;
}

void write_compare_outputs(const CompareOutcome& outcome, const PreparedData& data,
                           const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    write_text_file(out_dir / "compare_report.json", outcome.report.dump(2) + "\n");
    write_text_file(out_dir / "timing.json", outcome.timing.dump(2) + "\n");

    std::string metrics_csv = std::string(metrics::kReportCsvHeader) + "\n";
    for (const auto& r : outcome.evaluations) {
        metrics_csv += metrics::to_csv_row(r) + "\n";
    }
    write_text_file(out_dir / "metrics.csv", metrics_csv);
    write_text_file(out_dir / "esn_predictions.csv",
                    predictions_csv(data.test_dates(), data.test_actuals_raw(), outcome.esn_raw));
    write_text_file(out_dir / "lstm_predictions.csv",
                    predictions_csv(data.test_dates(), data.test_actuals_raw(), outcome.lstm_raw));
    write_text_file(out_dir / "lstm_loss.csv", loss_csv(outcome.lstm_loss_history));

    const auto test_actual = data.test_actuals_raw();
    const std::vector<Date> test_dates(data.test_dates().begin(), data.test_dates().end());
    chart::ChartOptions full;
    full.title = "Daily closing price";
    full.dates = data.series.dates;
    write_text_file(out_dir / "series.svg",
                    chart::render_chart({{"Close", data.series.values, 0, "#1f77b4"}}, full));

    chart::ChartOptions window;
    window.title = "Test window: one-step predictions";
    window.dates = test_dates;
    write_text_file(
        out_dir / "test_predictions.svg",
        chart::render_chart({{"Actual", {test_actual.begin(), test_actual.end()}, 0, "#1f77b4"},
                             {"LSTM", outcome.lstm_raw, 0, "#ff7f0e"},
                             {"Reservoir computing", outcome.esn_raw, 0, "#d62728"}},
                            window));

    chart::ChartOptions bands;
    bands.title = "Reservoir computing: train, test and prediction";
    bands.dates = data.series.dates;
    const std::vector<double> train(data.series.values.begin(),
                                    data.series.values.begin() +
                                        static_cast<std::ptrdiff_t>(data.split_at));
    write_text_file(
        out_dir / "esn_train_test.svg",
        chart::render_chart(
            {{"Training set", train, 0, "#1f77b4"},
             {"Test data", {test_actual.begin(), test_actual.end()}, data.split_at, "#ff7f0e"},
             {"Prediction", outcome.esn_raw, data.split_at, "#2ca02c"}},
            bands));
}

}  // namespace rescast
