#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stacktier/dataset.hpp"
#include "stacktier/metrics.hpp"
#include "stacktier/stacking.hpp"

namespace stacktier {

struct FeatureImportance {
    std::string feature;
    double mean_drop = 0.0;
    double std_drop = 0.0;
    int rank = 0;  // 1 = largest mean drop
};

struct ImportanceReport {
    std::string metric;
    double baseline = 0.0;
    std::vector<FeatureImportance> entries;  // sorted by mean drop descending

    std::vector<std::string> ranked_features() const;
};

struct AblationRow {
    int feature_count = 0;
    MetricReport report;
};

/// Shuffles one feature column at a time (repeats times, per-(feature,
/// repeat) seed streams), rescores the full model, and reports the mean
/// and std of baseline - permuted metric per feature.
ImportanceReport permutation_importance(const TwoLevelModel& model,
                                        const Dataset& eval,
                                        const std::string& metric, int repeats,
                                        std::uint64_t seed, int threads = 1);

struct PipelineConfig;

/// Top-k ablation study: for each count, restricts both partitions to
/// the top-ranked features (original column order preserved), retrains
/// the entire pipeline from scratch with the same seed, and evaluates
/// on the test partition. Implemented in pipeline.cpp.
std::vector<AblationRow> feature_ablation(const Dataset& train_raw,
                                          const Dataset& test_raw,
                                          const std::vector<std::string>& ranked_features,
                                          const std::vector<int>& counts,
                                          const PipelineConfig& config,
                                          std::uint64_t seed, int threads = 1);

std::string importance_csv(const ImportanceReport& report);
std::string importance_text(const ImportanceReport& report);

std::string ablation_csv(const std::vector<AblationRow>& rows);
std::string ablation_text(const std::vector<AblationRow>& rows);

}  // namespace stacktier
