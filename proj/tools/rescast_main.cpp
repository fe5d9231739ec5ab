#include "rescast/data_pipeline.hpp"
#include "rescast/error.hpp"
#include "rescast/esn.hpp"
#include "rescast/fetch.hpp"
#include "rescast/lstm.hpp"
#include "rescast/metrics.hpp"
#include "rescast/model_io.hpp"
#include "rescast/pipeline.hpp"
#include "rescast/run_config.hpp"
#include "rescast/text.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace rescast;

namespace {

struct CommonFlags {
    std::optional<std::string> config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    bool train_only_norm = false;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config, "key = value config file");
    cmd->add_option("--seed", flags.seed, "seed for both models");
    cmd->add_option("--out", flags.out, "output directory");
    cmd->add_flag("--train-only-norm", flags.train_only_norm,
                  "fit min/max on the training split only");
    cmd->allow_extras();
}

// Leftover `--dotted.key value` and `--dotted.key=value` tokens.
void apply_overrides(RunConfig& config, const std::vector<std::string>& extras) {
    for (std::size_t i = 0; i < extras.size(); ++i) {
        std::string_view token = extras[i];
        if (!token.starts_with("--")) {
            throw Error(ErrorKind::Config, "unexpected argument '" + std::string(token) + "'");
        }
        token.remove_prefix(2);
        if (const auto eq = token.find('='); eq != std::string_view::npos) {
            config.set(token.substr(0, eq), token.substr(eq + 1));
            continue;
        }
        if (i + 1 >= extras.size()) {
            throw Error(ErrorKind::Config, "--" + std::string(token) + " needs a value");
        }
        config.set(token, extras[++i]);
    }
}

RunConfig build_config(const CommonFlags& flags, const CLI::App* cmd) {
    RunConfig config = flags.config ? load_config_file(*flags.config) : RunConfig{};
    apply_overrides(config, cmd->remaining());
    if (flags.seed) {
        config.reservoir.seed = *flags.seed;
        config.lstm.seed = *flags.seed;
    }
    if (flags.out) {
        config.output_dir = *flags.out;
    }
    if (flags.train_only_norm) {
        config.set("normalization.mode", "train-only");
    }
    return config;
}

fs::path prepare_out_dir(const RunConfig& config) {
    std::error_code ec;
    fs::create_directories(config.output_dir, ec);
    if (ec || !fs::is_directory(config.output_dir)) {
        throw Error(ErrorKind::Config,
                    "output.dir: cannot create '" + config.output_dir.string() + "'");
    }
    return config.output_dir;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) {
        throw Error(ErrorKind::Config, "cannot write " + path.string());
    }
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::Fetch, "cannot read " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

int cmd_fetch(RunConfig config, const std::optional<std::string>& symbol,
              const std::optional<std::string>& start, const std::optional<std::string>& end,
              const std::optional<std::string>& endpoint,
              const std::optional<std::string>& cache_dir) {
    if (symbol) {
        config.set("data.symbol", *symbol);
        config.data_path.reset();
    }
    if (start) {
        config.set("data.start", *start);
    }
    if (end) {
        config.set("data.end", *end);
    }
    if (endpoint) {
        config.set("data.endpoint", *endpoint);
    }
    if (cache_dir) {
        config.set("data.cache_dir", *cache_dir);
    }
    if (!config.data_symbol) {
        throw Error(ErrorKind::Config, "data.symbol: fetch needs --symbol");
    }
    config.data_path.reset();
    config.validate();

    const FetchResult result = fetch_history(make_fetch_request(config));
    if (result.stale) {
        std::cerr << "warning: endpoint unreachable; served stale cache "
                  << result.cache_file.string() << '\n';
    }
    const fs::path out_dir = prepare_out_dir(config);
    const fs::path out_file = out_dir / result.cache_file.filename();
    write_file(out_file, serialize_ohlc_csv(result.series));

    const Series& s = result.series;
    std::cout << s.size() << " rows";
    if (!s.dates.empty()) {
        std::cout << " from " << format_iso_date(s.dates.front()) << " to "
                  << format_iso_date(s.dates.back());
    }
    std::cout << " -> " << out_file.string() << '\n';
    return 0;
}

nlohmann::ordered_json fit_report_json(std::string_view model, const FitReport& r) {
    nlohmann::ordered_json j;
    j["model"] = model;
    j["train_seconds"] = r.train_seconds;
    j["effective_samples"] = r.effective_samples;
    if (model == "esn") {
        j["ridge_residual_norm"] = r.ridge_residual_norm;
    } else {
        j["epochs"] = r.loss_history.size();
        j["initial_loss"] = r.loss_history.empty() ? nlohmann::ordered_json(nullptr)
                                                   : nlohmann::ordered_json(r.loss_history.front());
        j["final_loss"] = r.final_loss;
    }
    return j;
}

int cmd_train(const RunConfig& config, const std::string& model) {
    config.validate();
    const PreparedData data =
        prepare_data(load_series(config), config.split, config.lag, config.normalization);
    const fs::path out_dir = prepare_out_dir(config);

    const auto make_artifact = [&](auto fitted) {
        return ModelArtifact{std::move(fitted), data.params, config.split, config.lag, config.lstm};
    };
    std::optional<ModelArtifact> artifact;
    FitReport report;
    if (model == "esn") {
        esn::EsnModel esn_model = esn::EsnModel::build(config.reservoir);
        report = esn_model.fit_readout(data.train_set);
        artifact = make_artifact(std::move(esn_model));
    } else {
        lstm::LstmFit fit = lstm::lstm_fit(config.lstm, data.train_set);
        report = fit.report;
        artifact = make_artifact(std::move(fit.model));
        write_file(out_dir / "lstm_loss.csv", loss_csv(report.loss_history));
    }
    const fs::path model_file = out_dir / (model + ".model");
    save_model(*artifact, model_file);
    nlohmann::ordered_json j = fit_report_json(model, report);
    j["artifact"] = model_file.string();
    std::cout << j.dump(2) << '\n';
    return 0;
}

int cmd_predict(RunConfig config, const std::string& model_file,
                const std::optional<std::string>& data_path, const std::optional<std::string>& mode,
                const std::optional<std::size_t>& horizon) {
    if (data_path) {
        config.set("data.path", *data_path);
        config.data_symbol.reset();
    }
    if (mode) {
        config.set("predict.mode", *mode);
    }
    if (horizon) {
        config.set("predict.horizon", std::to_string(*horizon));
    }
    config.validate();
    ModelArtifact artifact = load_model(model_file);
    if (config.prediction_mode == PredictionMode::FreeRunning && artifact.lag != 1) {
        throw Error(ErrorKind::Config, "predict.mode: free-running needs a lag-1 model");
    }

    // The artifact's normalization and split, not the config's, define the scale.
    const Series series = load_series(config);
    PreparedData data;
    data.series = series;
    data.params = artifact.normalization;
    data.normalized = apply_normalization(series.values, data.params);
    data.lag = artifact.lag;
    data.split_at = split_index(series.size(), artifact.split);
    if (data.split_at < data.lag || data.split_at >= series.size()) {
        throw Error(ErrorKind::InsufficientData, "series too short for the model's split");
    }

    std::vector<Date> dates;
    std::vector<double> actual;
    std::vector<double> predicted;
    if (config.prediction_mode == PredictionMode::OneStep) {
        predicted = std::visit(
            [&](auto& m) -> std::vector<double> {
                if constexpr (std::is_same_v<std::decay_t<decltype(m)>, esn::EsnModel>) {
                    return esn_test_predictions(m, data, PredictionMode::OneStep);
                } else {
                    return lstm_test_predictions(m, data, PredictionMode::OneStep);
                }
            },
            artifact.model);
        dates.assign(data.test_dates().begin(), data.test_dates().end());
        actual.assign(data.test_actuals_raw().begin(), data.test_actuals_raw().end());
    } else {
        // Forecast past the last observation.
        const std::span<const double> history(data.normalized);
        const auto warmup = history.first(history.size() - 1);
        predicted = std::visit(
            [&](auto& m) -> std::vector<double> {
                if constexpr (std::is_same_v<std::decay_t<decltype(m)>, esn::EsnModel>) {
                    m.reset_state();
                    m.predict_one_step(warmup);
                    return m.predict_free_running(history.back(), config.horizon);
                } else {
                    return lstm::lstm_free_run(m, warmup, history.back(), config.horizon);
                }
            },
            artifact.model);
        Date d = series.dates.back();
        for (std::size_t i = 0; i < config.horizon; ++i) {
            d = next_business_day(d);
            dates.push_back(d);
        }
        actual.assign(config.horizon, kMissing);
    }
    predicted = denormalize(predicted, data.params);

    const fs::path out_file = prepare_out_dir(config) / "predictions.csv";
    write_file(out_file, predictions_csv(dates, actual, predicted));
    std::cout << predicted.size() << " predictions -> " << out_file.string() << '\n';
    return 0;
}

int cmd_evaluate(const RunConfig& config, const std::string& predictions_file,
                 const std::optional<std::string>& name) {
    const std::string text = read_file(predictions_file);
    std::vector<double> actual;
    std::vector<double> predicted;
    std::size_t line_no = 0;
    for (std::string_view line : text::split(text, '\n')) {
        ++line_no;
        line = text::trim(line);
        if (line.empty() || line_no == 1) {
            continue;
        }
        const auto cells = text::split(line, ',');
        if (cells.size() != 3) {
            throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) +
                                              ": expected date,actual,predicted");
        }
        if (text::trim(cells[1]).empty()) {
            continue;  // forecast rows have no actual
        }
        const auto a = text::parse_double(cells[1]);
        const auto p = text::parse_double(cells[2]);
        if (!a || !p) {
            throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": bad number");
        }
        actual.push_back(*a);
        predicted.push_back(*p);
    }
    metrics::EvaluationReport report = metrics::evaluate(actual, predicted, config.mape_epsilon);
    report.model_name = name.value_or(fs::path(predictions_file).stem().string());
    report.scale = metrics::Scale::Raw;

    const fs::path out_dir = prepare_out_dir(config);
    write_file(out_dir / "evaluation.json", metrics::to_json(report).dump(2) + "\n");
    std::cout << metrics::to_json(report).dump(2) << '\n';
    return 0;
}

int cmd_compare(const RunConfig& config) {
    config.validate();
    const PreparedData data =
        prepare_data(load_series(config), config.split, config.lag, config.normalization);
    const CompareOutcome outcome = run_compare(config, data);
    const fs::path out_dir = prepare_out_dir(config);
    write_compare_outputs(outcome, data, out_dir);

    std::cout << "model        MAE          RMSE         MAPE%       fit s\n";
    for (const auto& r : outcome.evaluations) {
        if (r.scale != metrics::Scale::Raw && config.scale != ScaleSelection::Normalized) {
            continue;
        }
        std::cout << r.model_name << std::string(13 - std::min<std::size_t>(12, r.model_name.size()), ' ')
                  << text::format_fixed(r.mae, 6) << "     " << text::format_fixed(r.rmse, 6)
                  << "     " << text::format_fixed(r.mape_percent, 4) << "      "
                  << (r.runtime_seconds ? text::format_fixed(*r.runtime_seconds, 3) : "-") << '\n';
    }
    std::cout << "MAPE winner (esn vs lstm): " << outcome.report["winners"]["mape_percent"].get<std::string>()
              << "; outputs in " << out_dir.string() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Reservoir-computing and LSTM forecasting of daily price series"};
    app.require_subcommand(1);

    CommonFlags common;

    auto* fetch = app.add_subcommand("fetch", "download daily history into the cache");
    add_common(fetch, common);
    std::optional<std::string> symbol, start, end, endpoint, cache_dir;
    fetch->add_option("--symbol", symbol, "ticker, e.g. CL=F");
    fetch->add_option("--start", start, "first date, YYYY-MM-DD");
    fetch->add_option("--end", end, "last date, YYYY-MM-DD (inclusive)");
    fetch->add_option("--endpoint", endpoint, "URL template");
    fetch->add_option("--cache-dir", cache_dir, "cache directory");

    auto* train = app.add_subcommand("train", "fit one model and write its artifact");
    add_common(train, common);
    std::string model = "esn";
    train->add_option("--model", model, "esn or lstm")->check(CLI::IsMember({"esn", "lstm"}));

    auto* predict = app.add_subcommand("predict", "predict with a saved model");
    add_common(predict, common);
    std::string model_file;
    std::optional<std::string> data_path, mode;
    std::optional<std::size_t> horizon;
    predict->add_option("--model-file", model_file, "artifact from train")->required();
    predict->add_option("--data", data_path, "CSV to predict on");
    predict->add_option("--mode", mode, "one-step or free-running");
    predict->add_option("--horizon", horizon, "free-running steps");

    auto* evaluate = app.add_subcommand("evaluate", "score a predictions CSV");
    add_common(evaluate, common);
    std::string predictions_file;
    std::optional<std::string> name;
    evaluate->add_option("--predictions", predictions_file, "date,actual,predicted CSV")
        ->required();
    evaluate->add_option("--name", name, "model name for the report");

    auto* compare = app.add_subcommand("compare", "train both models and compare them");
    add_common(compare, common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (*fetch) {
            return cmd_fetch(build_config(common, fetch), symbol, start, end, endpoint, cache_dir);
        }
        if (*train) {
            return cmd_train(build_config(common, train), model);
        }
        if (*predict) {
            return cmd_predict(build_config(common, predict), model_file, data_path, mode, horizon);
        }
        if (*evaluate) {
            return cmd_evaluate(build_config(common, evaluate), predictions_file, name);
        }
        return cmd_compare(build_config(common, compare));
    } catch (const Error& e) {
        std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
        return exit_code(e.kind());
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error (filesystem): " << e.what() << '\n';
        return 2;
    }
}
