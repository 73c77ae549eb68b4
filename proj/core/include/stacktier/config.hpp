#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stacktier/smote.hpp"
#include "stacktier/stacking.hpp"
#include "stacktier/tuning.hpp"

namespace stacktier {

/// Everything the pipeline commands read from the JSON config file.
/// Defaults mirror the documented pipeline constants (20% missingness
/// threshold, 80-20 split, k=5 folds, four base families, RF-RF).
struct PipelineConfig {
    std::string data_path;
    std::string label_column = "label";
    std::vector<std::string> missing_tokens = {"", "NA", "NaN"};
    double max_missing_fraction = 0.20;
    double test_fraction = 0.20;

    bool smote_enabled = true;
    SmoteParams smote;

    int folds = 5;
    std::vector<Family> families = {Family::random_forest, Family::gbm,
                                    Family::xgb, Family::linear_svc};
    std::map<Family, std::vector<LearnerSpec>> grids;
    SelectionPolicy policy;
    CombinerKind combiner = CombinerKind::rf;
    CombinerKind meta = CombinerKind::rf;
    std::string architecture = "two_level";  // or "one_level"

    std::uint64_t seed = 42;
    std::string out_dir = "stacktier_out";
    double threshold = 0.5;
    bool compat_presplit_smote = false;
    int threads = 1;

    double combiner_l2 = 0.01;
    int combiner_forest_trees = 300;
    double svc_calibration_scale = 2.0;

    /// The stacking-layer slice of this config.
    StackingConfig stacking() const;

    /// Stable hash of the canonical serialized form; stored in model
    /// containers and checked on load.
    std::uint64_t fingerprint() const;

    std::string canonical_json() const;
};

/// Parses and validates a JSON config file. Unknown keys are hard
/// errors that name the nearest valid key; omitted keys take defaults.
PipelineConfig parse_config(const std::string& path);

PipelineConfig parse_config_text(const std::string& json_text);

}  // namespace stacktier
