#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stacktier/dataset.hpp"
#include "stacktier/learner.hpp"
#include "stacktier/smote.hpp"

namespace stacktier {

/// Cross-validated result of one hyperparameter configuration.
struct ConfigScore {
    LearnerSpec spec;
    bool valid = true;
    std::map<std::string, double> cv_mean;
    std::map<std::string, std::vector<double>> cv_fold_values;
};

/// Which metrics pick internal-stack members and how many winners
/// each contributes before deduplication.
struct SelectionPolicy {
    std::vector<std::string> metrics = {"accuracy", "precision", "recall", "roc_auc"};
    int per_metric_top = 1;
};

/// Per-fold train-on-complement / score-on-fold evaluation of one spec.
/// When smote is given it is applied inside each training complement
/// only, never to the evaluated fold (a no-op on pre-balanced data).
ConfigScore cv_score(const LearnerSpec& spec, const Dataset& ds,
                     const FoldPlan& folds, std::uint64_t seed,
                     const std::optional<SmoteParams>& smote = std::nullopt,
                     double threshold = 0.5);

/// One ConfigScore per distinct valid spec, in canonical spec_id order
/// (invariant under input permutation).
std::vector<ConfigScore> grid_search(const std::vector<LearnerSpec>& grid,
                                     const Dataset& ds, const FoldPlan& folds,
                                     std::uint64_t seed,
                                     const std::optional<SmoteParams>& smote = std::nullopt,
                                     int threads = 1, double threshold = 0.5);

/// Union of the per-metric winners (ties to the lower spec_id),
/// duplicates removed; the chosen specs become the stack members.
std::vector<LearnerSpec> select_top_configs(const std::vector<ConfigScore>& scores,
                                            const SelectionPolicy& policy);

/// Built-in hyperparameter grid for a family, used when the pipeline
/// config does not override it.
std::vector<LearnerSpec> default_grid(Family family);

std::string config_scores_csv(const std::vector<ConfigScore>& scores);

}  // namespace stacktier
