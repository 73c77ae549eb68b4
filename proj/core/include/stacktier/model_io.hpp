#pragma once

#include <string>
#include <variant>

#include "stacktier/stacking.hpp"

namespace stacktier {

using ModelVariant = std::variant<TwoLevelModel, OneLevelModel>;

inline constexpr char kModelMagic[6] = {'T', 'L', 'E', 'N', 'S', '1'};
inline constexpr std::uint16_t kModelFormatVersion = 1;

/// Self-describing JSON payload of a trained model; the byte content is
/// deterministic for a deterministic model.
std::string model_payload_json(const ModelVariant& model);
ModelVariant model_from_payload_json(const std::string& payload);

/// Container layout: magic "TLENS1", 2-byte little-endian format
/// version, 8-byte little-endian payload length, payload bytes.
/// Writes are atomic (temp file + rename).
void save_model(const std::string& path, const ModelVariant& model);
ModelVariant load_model(const std::string& path);

/// Atomic text-file write used for every emitted artifact.
void write_file_atomic(const std::string& path, const std::string& content);

std::string fitted_model_json(const FittedModel& model);

const Preprocessing& model_preprocessing(const ModelVariant& model);
double model_threshold(const ModelVariant& model);
std::vector<double> predict_model(const ModelVariant& model, const Dataset& raw);

}  // namespace stacktier
