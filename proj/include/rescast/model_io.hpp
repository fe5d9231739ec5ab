#pragma once

#include "rescast/data_pipeline.hpp"
#include "rescast/esn.hpp"
#include "rescast/lstm.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <variant>

namespace rescast {

inline constexpr int kModelFormatVersion = 1;

/// A trained model together with the preprocessing it was trained under.
///
/// On disk this is a line-oriented text container: a `rescast-model` magic
/// line, `format_version`, `kind`, `key value` metadata, then weight blocks.
/// Doubles use shortest round-trip notation so weights reload bit-exactly;
/// W_res is stored as a coordinate list.
struct ModelArtifact {
    std::variant<esn::EsnModel, lstm::LstmModel> model;
    NormalizationParams normalization;
    SplitSpec split;
    std::size_t lag = 1;
    // Set for LSTM artifacts only.
    lstm::LstmConfig lstm_config;
};

std::string serialize_model(const ModelArtifact& artifact);

/// Throws Error(Artifact) on a bad magic line, an unsupported format version
/// or a malformed block.
ModelArtifact deserialize_model(std::string_view text);

void save_model(const ModelArtifact& artifact, const std::filesystem::path& path);
ModelArtifact load_model(const std::filesystem::path& path);

}  // namespace rescast
