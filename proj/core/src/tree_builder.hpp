#pragma once

#include <cstddef>
#include <vector>

#include "stacktier/learner.hpp"
#include "stacktier/matrix.hpp"
#include "stacktier/rng.hpp"

namespace stacktier::detail {

struct TreeParams {
    int max_depth = 0;               // 0 = unbounded
    std::size_t min_samples_leaf = 1;
    std::size_t max_features = 0;    // 0 = consider every feature
};

/// Greedy CART: Gini impurity splits at midpoints between consecutive
/// distinct sorted values, ties in gain broken by (lower feature index,
/// lower threshold). Leaves hold the positive training fraction.
/// feature_rng drives per-split feature subsampling when max_features
/// is set (random forest); pass nullptr to consider all features.
std::vector<TreeNode> fit_class_tree(const Matrix& X, const std::vector<int>& y,
                                     const std::vector<std::size_t>& rows,
                                     const TreeParams& params, Rng* feature_rng);

enum class GainMode {
    variance,  // SSE reduction on g; leaf = sum(g)/sum(h), Newton step
    xgb        // xgb_split_gain on (g, h); leaf = -G/(H+lambda)
};

struct BoostTreeParams {
    int max_depth = 2;
    std::size_t min_samples_leaf = 1;
    double lambda = 0.0;
    double gamma = 0.0;
    GainMode mode = GainMode::variance;
};

/// Regression tree over per-row gradient statistics (g, h).
std::vector<TreeNode> fit_gh_tree(const Matrix& X, const std::vector<double>& g,
                                  const std::vector<double>& h,
                                  const std::vector<std::size_t>& rows,
                                  const BoostTreeParams& params);

}  // namespace stacktier::detail
