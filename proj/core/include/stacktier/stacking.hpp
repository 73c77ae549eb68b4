#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stacktier/dataset.hpp"
#include "stacktier/learner.hpp"
#include "stacktier/smote.hpp"
#include "stacktier/tuning.hpp"

namespace stacktier {

enum class CombinerKind { lr, rf };

std::string combiner_name(CombinerKind kind);
CombinerKind combiner_from_name(const std::string& name);

/// Out-of-fold score matrix: entry (i, j) is spec j's score on row i
/// from the model trained on every fold except row i's. Provenance
/// records which fold plan and specs produced it.
struct MetaFeatures {
    Matrix values;
    std::uint64_t fold_plan_id = 0;
    std::vector<std::string> spec_ids;
};

/// One base family's internal ensemble: the selected member configs
/// refit on the full training data, plus the fitted combiner over
/// their score columns.
struct InternalStack {
    Family family = Family::random_forest;
    std::vector<LearnerSpec> member_specs;
    std::vector<FittedModel> members;
    CombinerKind combiner_kind = CombinerKind::lr;
    FittedModel combiner;
};

/// Everything the stacking layers need to know that is not data:
/// family list, grids, selection policy, combiner/meta kinds, and the
/// hyperparameters of the combiners themselves.
struct StackingConfig {
    std::vector<Family> families = {Family::random_forest, Family::gbm,
                                    Family::xgb, Family::linear_svc};
    std::map<Family, std::vector<LearnerSpec>> grids;  // default_grid when absent
    SelectionPolicy policy;
    CombinerKind combiner = CombinerKind::rf;
    CombinerKind meta = CombinerKind::rf;
    int folds = 5;
    std::optional<SmoteParams> smote;  // applied inside CV training complements
    double threshold = 0.5;
    double combiner_l2 = 0.01;
    int combiner_forest_trees = 300;

    /// Optional sink receiving every ConfigScore the tuning pass
    /// produced, in family order (diagnostics dump).
    std::vector<ConfigScore>* tuning_sink = nullptr;

    const std::vector<LearnerSpec>& grid_for(Family family) const;
};

/// The full second-level artifact: the internal stacks, the
/// meta-learner over their outputs, and the frozen preprocessing
/// state.
struct TwoLevelModel {
    std::vector<InternalStack> stacks;
    CombinerKind meta_kind = CombinerKind::rf;
    FittedModel meta;
    Preprocessing preprocessing;
    std::uint64_t config_fingerprint = 0;
    double threshold = 0.5;
};

/// Baseline: all selected configs of all families pooled into a single
/// member list with one meta-learner directly on top.
struct OneLevelModel {
    std::vector<LearnerSpec> member_specs;
    std::vector<FittedModel> members;
    CombinerKind meta_kind = CombinerKind::rf;
    FittedModel meta;
    Preprocessing preprocessing;
    std::uint64_t config_fingerprint = 0;
    double threshold = 0.5;
};

MetaFeatures oof_meta_features(const std::vector<LearnerSpec>& specs,
                               const Dataset& ds, const FoldPlan& folds,
                               std::uint64_t seed,
                               const std::optional<SmoteParams>& smote = std::nullopt,
                               int threads = 1);

InternalStack fit_internal_stack(Family family, const Dataset& ds,
                                 const FoldPlan& folds, const StackingConfig& config,
                                 std::uint64_t seed, int threads = 1);

std::vector<double> predict_internal(const InternalStack& stack, const Matrix& X);

TwoLevelModel fit_two_level(const Dataset& train, const StackingConfig& config,
                            const Preprocessing& preprocessing, std::uint64_t seed,
                            int threads = 1);

std::vector<double> predict_two_level(const TwoLevelModel& model, const Dataset& raw);

OneLevelModel fit_one_level(const Dataset& train, const StackingConfig& config,
                            const Preprocessing& preprocessing, std::uint64_t seed,
                            int threads = 1);

std::vector<double> predict_one_level(const OneLevelModel& model, const Dataset& raw);

}  // namespace stacktier
