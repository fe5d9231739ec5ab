#include "rescast/run_config.hpp"

#include "rescast/error.hpp"
#include "rescast/text.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

namespace rescast {

namespace {

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view want) {
    throw Error(ErrorKind::Config, std::string(key) + ": expected " + std::string(want) +
                                       ", got '" + std::string(value) + "'");
}

double to_double(std::string_view key, std::string_view value) {
    const auto v = text::parse_double(value);
    if (!v || !std::isfinite(*v)) {
        bad_value(key, value, "a number");
    }
    return *v;
}

std::size_t to_count(std::string_view key, std::string_view value) {
    const auto v = text::parse_int(value);
    if (!v || *v < 0) {
        bad_value(key, value, "a non-negative integer");
    }
    return static_cast<std::size_t>(*v);
}

std::uint64_t to_seed(std::string_view key, std::string_view value) {
    value = text::trim(value);
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (value.empty() || ec != std::errc{} || ptr != value.data() + value.size()) {
        bad_value(key, value, "an unsigned 64-bit integer");
    }
    return v;
}

bool to_bool(std::string_view key, std::string_view value) {
    if (value == "true" || value == "1" || value == "on" || value == "yes") {
        return true;
    }
    if (value == "false" || value == "0" || value == "off" || value == "no") {
        return false;
    }
    bad_value(key, value, "true or false");
}

Date to_date(std::string_view key, std::string_view value) {
    Date d;
    if (!parse_iso_date(value, d)) {
        bad_value(key, value, "a YYYY-MM-DD date");
    }
    return d;
}

std::string num(double v) { return text::format_double(v); }
std::string boolean(bool v) { return v ? "true" : "false"; }

struct Field {
    std::string_view key;
    std::function<void(RunConfig&, std::string_view)> set;
    std::function<std::string(const RunConfig&)> get;
};

const std::vector<Field>& fields() {
    static const std::vector<Field> table = [] {
        std::vector<Field> f;
        f.push_back({"data.path",
                     [](RunConfig& c, std::string_view v) {
                         c.data_path = v.empty() ? std::nullopt
                                                 : std::optional<std::filesystem::path>(v);
                     },
                     [](const RunConfig& c) {
                         return c.data_path ? c.data_path->generic_string() : std::string();
                     }});
        f.push_back({"data.symbol",
                     [](RunConfig& c, std::string_view v) {
                         c.data_symbol = v.empty() ? std::nullopt : std::optional<std::string>(v);
                     },
                     [](const RunConfig& c) { return c.data_symbol.value_or(""); }});
        f.push_back({"data.start",
                     [](RunConfig& c, std::string_view v) { c.data_start = to_date("data.start", v); },
                     [](const RunConfig& c) { return format_iso_date(c.data_start); }});
        f.push_back({"data.end",
                     [](RunConfig& c, std::string_view v) { c.data_end = to_date("data.end", v); },
                     [](const RunConfig& c) { return format_iso_date(c.data_end); }});
        f.push_back({"data.endpoint",
                     [](RunConfig& c, std::string_view v) { c.data_endpoint = std::string(v); },
                     [](const RunConfig& c) { return c.data_endpoint; }});
        f.push_back({"data.cache_dir",
                     [](RunConfig& c, std::string_view v) { c.cache_dir = std::string(v); },
                     [](const RunConfig& c) { return c.cache_dir.generic_string(); }});
        f.push_back({"data.outliers",
                     [](RunConfig& c, std::string_view v) {
                         if (v == "none") {
                             c.outliers.kind = OutlierPolicy::Kind::None;
                         } else if (v == "zscore") {
                             c.outliers.kind = OutlierPolicy::Kind::ZScore;
                         } else {
                             bad_value("data.outliers", v, "none or zscore");
                         }
                     },
                     [](const RunConfig& c) {
                         return std::string(c.outliers.kind == OutlierPolicy::Kind::None ? "none"
                                                                                          : "zscore");
                     }});
        f.push_back({"data.outlier_k",
                     [](RunConfig& c, std::string_view v) {
                         c.outliers.k = to_double("data.outlier_k", v);
                     },
                     [](const RunConfig& c) { return num(c.outliers.k); }});
        f.push_back({"split.train_fraction",
                     [](RunConfig& c, std::string_view v) {
                         c.split.train_fraction = to_double("split.train_fraction", v);
                     },
                     [](const RunConfig& c) { return num(c.split.train_fraction); }});
        f.push_back({"supervised.lag",
                     [](RunConfig& c, std::string_view v) { c.lag = to_count("supervised.lag", v); },
                     [](const RunConfig& c) { return std::to_string(c.lag); }});
        f.push_back({"normalization.mode",
                     [](RunConfig& c, std::string_view v) {
                         if (v == "full") {
                             c.normalization = NormalizationMode::Full;
                         } else if (v == "train-only") {
                             c.normalization = NormalizationMode::TrainOnly;
                         } else {
                             bad_value("normalization.mode", v, "full or train-only");
                         }
                     },
                     [](const RunConfig& c) {
                         return std::string(c.normalization == NormalizationMode::Full ? "full"
                                                                                        : "train-only");
                     }});

        const auto res_num = [&f](std::string_view key, double esn::ReservoirConfig::*member) {
            f.push_back({key,
                         [key, member](RunConfig& c, std::string_view v) {
                             c.reservoir.*member = to_double(key, v);
                         },
                         [member](const RunConfig& c) { return num(c.reservoir.*member); }});
        };
        f.push_back({"reservoir.units",
                     [](RunConfig& c, std::string_view v) {
                         c.reservoir.units = to_count("reservoir.units", v);
                     },
                     [](const RunConfig& c) { return std::to_string(c.reservoir.units); }});
        res_num("reservoir.leak_rate", &esn::ReservoirConfig::leak_rate);
        res_num("reservoir.rho", &esn::ReservoirConfig::spectral_radius);
        res_num("reservoir.input_scaling", &esn::ReservoirConfig::input_scaling);
        res_num("reservoir.rc_connectivity", &esn::ReservoirConfig::rc_connectivity);
        res_num("reservoir.input_connectivity", &esn::ReservoirConfig::input_connectivity);
        res_num("reservoir.fb_connectivity", &esn::ReservoirConfig::fb_connectivity);
        res_num("reservoir.regularization_coef", &esn::ReservoirConfig::regularization_coef);
        f.push_back({"reservoir.washout",
                     [](RunConfig& c, std::string_view v) {
                         c.reservoir.washout = to_count("reservoir.washout", v);
                     },
                     [](const RunConfig& c) { return std::to_string(c.reservoir.washout); }});
        f.push_back({"reservoir.seed",
                     [](RunConfig& c, std::string_view v) {
                         c.reservoir.seed = to_seed("reservoir.seed", v);
                     },
                     [](const RunConfig& c) { return std::to_string(c.reservoir.seed); }});
        f.push_back({"reservoir.feedback_enabled",
                     [](RunConfig& c, std::string_view v) {
                         c.reservoir.feedback_enabled = to_bool("reservoir.feedback_enabled", v);
                     },
                     [](const RunConfig& c) { return boolean(c.reservoir.feedback_enabled); }});

        f.push_back({"lstm.hidden_units",
                     [](RunConfig& c, std::string_view v) {
                         c.lstm.hidden_units = to_count("lstm.hidden_units", v);
                     },
                     [](const RunConfig& c) { return std::to_string(c.lstm.hidden_units); }});
        f.push_back({"lstm.epochs",
                     [](RunConfig& c, std::string_view v) { c.lstm.epochs = to_count("lstm.epochs", v); },
                     [](const RunConfig& c) { return std::to_string(c.lstm.epochs); }});
        f.push_back({"lstm.learning_rate",
                     [](RunConfig& c, std::string_view v) {
                         c.lstm.learning_rate = to_double("lstm.learning_rate", v);
                     },
                     [](const RunConfig& c) { return num(c.lstm.learning_rate); }});
        f.push_back({"lstm.bptt_window",
                     [](RunConfig& c, std::string_view v) {
                         c.lstm.bptt_window = to_count("lstm.bptt_window", v);
                     },
                     [](const RunConfig& c) { return std::to_string(c.lstm.bptt_window); }});
        f.push_back({"lstm.seed",
                     [](RunConfig& c, std::string_view v) { c.lstm.seed = to_seed("lstm.seed", v); },
                     [](const RunConfig& c) { return std::to_string(c.lstm.seed); }});
        f.push_back({"lstm.optimizer",
                     [](RunConfig& c, std::string_view v) {
                         if (v == "adaptive-moments" || v == "adam") {
                             c.lstm.optimizer = lstm::Optimizer::AdaptiveMoments;
                         } else if (v == "plain-gradient" || v == "sgd") {
                             c.lstm.optimizer = lstm::Optimizer::PlainGradient;
                         } else {
                             bad_value("lstm.optimizer", v, "adaptive-moments or plain-gradient");
                         }
                     },
                     [](const RunConfig& c) { return std::string(lstm::to_string(c.lstm.optimizer)); }});
        f.push_back({"lstm.beta1",
                     [](RunConfig& c, std::string_view v) { c.lstm.beta1 = to_double("lstm.beta1", v); },
                     [](const RunConfig& c) { return num(c.lstm.beta1); }});
        f.push_back({"lstm.beta2",
                     [](RunConfig& c, std::string_view v) { c.lstm.beta2 = to_double("lstm.beta2", v); },
                     [](const RunConfig& c) { return num(c.lstm.beta2); }});
        f.push_back({"lstm.epsilon",
                     [](RunConfig& c, std::string_view v) {
                         c.lstm.epsilon = to_double("lstm.epsilon", v);
                     },
                     [](const RunConfig& c) { return num(c.lstm.epsilon); }});

        f.push_back({"metrics.mape_epsilon",
                     [](RunConfig& c, std::string_view v) {
                         c.mape_epsilon = to_double("metrics.mape_epsilon", v);
                     },
                     [](const RunConfig& c) { return num(c.mape_epsilon); }});
        f.push_back({"metrics.scale",
                     [](RunConfig& c, std::string_view v) {
                         if (v == "raw") {
                             c.scale = ScaleSelection::Raw;
                         } else if (v == "normalized") {
                             c.scale = ScaleSelection::Normalized;
                         } else if (v == "both") {
                             c.scale = ScaleSelection::Both;
                         } else {
                             bad_value("metrics.scale", v, "raw, normalized or both");
                         }
                     },
                     [](const RunConfig& c) {
                         switch (c.scale) {
                             case ScaleSelection::Raw: return std::string("raw");
                             case ScaleSelection::Normalized: return std::string("normalized");
                             case ScaleSelection::Both: break;
                         }
                         return std::string("both");
                     }});
        f.push_back({"output.dir",
                     [](RunConfig& c, std::string_view v) { c.output_dir = std::string(v); },
                     [](const RunConfig& c) { return c.output_dir.generic_string(); }});
        f.push_back({"predict.mode",
                     [](RunConfig& c, std::string_view v) {
                         if (v == "one-step") {
                             c.prediction_mode = PredictionMode::OneStep;
                         } else if (v == "free-running") {
                             c.prediction_mode = PredictionMode::FreeRunning;
                         } else {
                             bad_value("predict.mode", v, "one-step or free-running");
                         }
                     },
                     [](const RunConfig& c) {
                         return std::string(c.prediction_mode == PredictionMode::OneStep
                                                ? "one-step"
                                                : "free-running");
                     }});
        f.push_back({"predict.horizon",
                     [](RunConfig& c, std::string_view v) {
                         c.horizon = to_count("predict.horizon", v);
                     },
                     [](const RunConfig& c) { return std::to_string(c.horizon); }});
        return f;
    }();
    return table;
}

// Published hyperparameter names that map onto reservoir.* keys.
std::string resolve_alias(std::string_view key) {
    static constexpr std::string_view bare[] = {
        "units",           "leak_rate",          "rho",
        "input_scaling",   "rc_connectivity",    "input_connectivity",
        "fb_connectivity", "regularization_coef"};
    for (std::string_view b : bare) {
        if (key == b) {
            return "reservoir." + std::string(key);
        }
    }
    if (key == "reservoir.spectral_radius") {
        return "reservoir.rho";
    }
    return std::string(key);
}

}  // namespace

RunConfig::RunConfig() {
    parse_iso_date("2010-01-01", data_start);
    parse_iso_date("2023-05-31", data_end);
}

void RunConfig::set(std::string_view key, std::string_view value) {
    const std::string resolved = resolve_alias(text::trim(key));
    value = text::trim(value);
    for (const Field& field : fields()) {
        if (field.key == resolved) {
            field.set(*this, value);
            return;
        }
    }
    throw Error(ErrorKind::Config, "unknown config key '" + std::string(key) + "'");
}

void RunConfig::validate() const {
    if (data_path.has_value() == data_symbol.has_value()) {
        throw Error(ErrorKind::Config,
                    "data: set exactly one of data.path (local CSV) or data.symbol (fetch)");
    }
    if (data_symbol && data_end < data_start) {
        throw Error(ErrorKind::Config, "data.end precedes data.start");
    }
    if (lag == 0) {
        throw Error(ErrorKind::Config, "supervised.lag must be a positive integer");
    }
    split_index(4, split);  // range check on the fraction
    if (!(mape_epsilon >= 0.0)) {
        throw Error(ErrorKind::Config, "metrics.mape_epsilon must be non-negative");
    }
    if (outliers.kind == OutlierPolicy::Kind::ZScore && !(outliers.k > 0.0)) {
        throw Error(ErrorKind::Config, "data.outlier_k must be positive");
    }
    if (horizon == 0) {
        throw Error(ErrorKind::Config, "predict.horizon must be positive");
    }
    if (prediction_mode == PredictionMode::FreeRunning && lag != 1) {
        throw Error(ErrorKind::Config, "free-running prediction requires supervised.lag = 1");
    }
    reservoir.validate();
    lstm.validate();
}

std::string RunConfig::canonical_text() const {
    std::string out;
    for (const Field& field : fields()) {
        out += field.key;
        out += " = ";
        out += field.get(*this);
        out += '\n';
    }
    return out;
}

std::string RunConfig::fingerprint() const { return fnv1a_hex(canonical_text()); }

void apply_config_text(RunConfig& config, std::string_view text) {
    std::size_t line_no = 0;
    for (std::string_view line : text::split(text, '\n')) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = text::trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw Error(ErrorKind::Config, "config line " + std::to_string(line_no) +
                                               ": expected 'key = value'");
        }
        try {
            config.set(line.substr(0, eq), line.substr(eq + 1));
        } catch (const Error& e) {
            throw Error(ErrorKind::Config,
                        "config line " + std::to_string(line_no) + ": " + e.what());
        }
    }
}

RunConfig parse_config_text(std::string_view text) {
    RunConfig config;
    apply_config_text(config, text);
    return config;
}

RunConfig load_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::Config, "cannot read config file " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

const std::vector<std::string_view>& config_keys() {
    static const std::vector<std::string_view> keys = [] {
        std::vector<std::string_view> k;
        for (const Field& f : fields()) {
            k.push_back(f.key);
        }
        return k;
    }();
    return keys;
}

std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

}  // namespace rescast
