#pragma once

#include <optional>
#include <string>
#include <vector>

#include "stacktier/config.hpp"
#include "stacktier/importance.hpp"
#include "stacktier/model_io.hpp"

namespace stacktier {

/// Result of fitting on an existing train/test partition.
struct TrainOutput {
    ModelVariant model;
    MetricReport test_report;
    MetricReport train_report;
};

/// Core of the training flow, shared by train_command and the ablation
/// study: restrict to kept features, impute (train-fitted), SMOTE
/// (train only), standardize (train-fitted), fit the configured
/// architecture, evaluate on the raw test partition. Both partitions
/// keep their full raw schema; the frozen preprocessing embeds the
/// keep-list.
TrainOutput train_on_split(const Dataset& train_raw, const Dataset& test_raw,
                           const std::vector<std::string>& kept_feature_names,
                           const PipelineConfig& config, std::uint64_t seed,
                           int threads,
                           std::vector<ConfigScore>* diagnostics = nullptr);

struct TrainCommandResult {
    std::string model_path;
    MetricReport test_report;
    MetricReport train_report;
};

/// Full Figure-1 flow: load, missingness filter, stratified split,
/// train-side preprocessing, two-level fit, test evaluation, artifact
/// emission. Every stage logs row/column counts; failures carry a
/// stage tag.
TrainCommandResult train_command(const PipelineConfig& config);

/// Applies a persisted model's frozen preprocessing to a data file and
/// emits the six-metric report.
MetricReport evaluate_command(const std::string& model_path,
                              const std::string& data_path,
                              const std::string& out_dir = "");

ImportanceReport importance_command(const std::string& model_path,
                                    const std::string& data_path,
                                    const std::string& metric, int repeats,
                                    std::uint64_t seed, int threads,
                                    const std::string& out_dir = "");

struct AblateOptions {
    std::vector<int> counts;
    bool mask_only = false;  // cheap preview: mask features instead of retraining
    int importance_repeats = 10;
};

std::vector<AblationRow> ablate_command(const PipelineConfig& config,
                                        const AblateOptions& options);

/// Emits a synthetic benchmark CSV; returns the written path.
std::string benchgen_command(const SyntheticSpec& spec, const std::string& out_path);

}  // namespace stacktier
