#pragma once

#include "rescast/data_pipeline.hpp"
#include "rescast/esn.hpp"
#include "rescast/fetch.hpp"
#include "rescast/lstm.hpp"
#include "rescast/metrics.hpp"
#include "rescast/series.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rescast {

enum class NormalizationMode { Full, TrainOnly };
enum class PredictionMode { OneStep, FreeRunning };
enum class ScaleSelection { Raw, Normalized, Both };

struct FetchSpec {
    std::string symbol;
    Date start;
    Date end;
    std::string endpoint = std::string(kDefaultEndpoint);
};

/// Every experimental choice of a run in one reproducible manifest.
///
/// The on-disk form is a flat `key = value` file with `#` comments and dotted
/// section keys (`reservoir.leak_rate = 0.75`). Reservoir keys may also be
/// written bare (`leak_rate = 0.75`, `rho = 1.025`) so a published
/// hyperparameter block pastes in unchanged.
struct RunConfig {
    std::optional<std::filesystem::path> data_path;
    std::optional<std::string> data_symbol;
    Date data_start;
    Date data_end;
    std::string data_endpoint = std::string(kDefaultEndpoint);
    std::filesystem::path cache_dir = ".rescast-cache";
    OutlierPolicy outliers;

    SplitSpec split;
    std::size_t lag = 1;
    NormalizationMode normalization = NormalizationMode::Full;
    esn::ReservoirConfig reservoir;
    lstm::LstmConfig lstm;
    double mape_epsilon = metrics::kDefaultMapeEpsilon;
    ScaleSelection scale = ScaleSelection::Raw;
    std::filesystem::path output_dir = "out";
    PredictionMode prediction_mode = PredictionMode::OneStep;
    std::size_t horizon = 10;

    RunConfig();

    /// Sets one dotted key from its textual value. Throws Error(Config) naming
    /// the key on unknown keys or unparseable values.
    void set(std::string_view key, std::string_view value);

    /// Cross-field checks: exactly one data source, valid sub-configs.
    void validate() const;

    /// `key = value` lines for every field in a fixed order; parsing this
    /// text reproduces the config.
    [[nodiscard]] std::string canonical_text() const;

    /// FNV-1a 64 of canonical_text(), as 16 hex digits.
    [[nodiscard]] std::string fingerprint() const;
};

/// Applies a config file's assignments on top of the defaults.
RunConfig parse_config_text(std::string_view text);
RunConfig load_config_file(const std::filesystem::path& path);

/// Applies the assignments from `text` onto an existing config.
void apply_config_text(RunConfig& config, std::string_view text);

/// Every key RunConfig::set accepts, in canonical order.
const std::vector<std::string_view>& config_keys();

std::string fnv1a_hex(std::string_view bytes);

}  // namespace rescast
