#include "tree_builder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace stacktier::detail {

namespace {

struct SplitChoice {
    bool found = false;
    std::size_t feature = 0;
    double threshold = 0.0;
    double gain = 0.0;
};

// Candidate thresholds are midpoints between consecutive distinct sorted
// values. If the midpoint rounds down onto the left value, the right
// value itself is used so that the "x < threshold" routing reproduces
// the evaluated partition exactly.
double separating_threshold(double lo, double hi) {
    double mid = lo + 0.5 * (hi - lo);
    if (!(mid > lo)) mid = hi;
    return mid;
}

// Picks the feature subset for one split. Indices come out ascending so
// the first strictly-better candidate wins ties by lower feature index.
void choose_features(std::size_t n_features, std::size_t max_features,
                     Rng* rng, std::vector<std::size_t>& out) {
    out.clear();
    if (max_features == 0 || max_features >= n_features || rng == nullptr) {
        out.resize(n_features);
        std::iota(out.begin(), out.end(), 0);
        return;
    }
    static thread_local std::vector<std::size_t> pool;
    pool.resize(n_features);
    std::iota(pool.begin(), pool.end(), 0);
    for (std::size_t i = 0; i < max_features; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng->next_below(n_features - i));
        std::swap(pool[i], pool[j]);
        out.push_back(pool[i]);
    }
    std::sort(out.begin(), out.end());
}

class ClassTreeBuilder {
public:
    ClassTreeBuilder(const Matrix& X, const std::vector<int>& y,
                     const TreeParams& params, Rng* rng)
        : X_(X), y_(y), params_(params), rng_(rng) {}

    std::vector<TreeNode> build(const std::vector<std::size_t>& rows) {
        nodes_.clear();
        grow(rows, 0);
        return std::move(nodes_);
    }

private:
    int grow(const std::vector<std::size_t>& rows, int depth) {
        const int id = static_cast<int>(nodes_.size());
        nodes_.emplace_back();

        std::size_t pos = 0;
        for (std::size_t r : rows) pos += (y_[r] == 1);
        const std::size_t n = rows.size();
        nodes_[id].value = static_cast<double>(pos) / static_cast<double>(n);

        const bool pure = pos == 0 || pos == n;
        const bool depth_capped = params_.max_depth > 0 && depth >= params_.max_depth;
        if (pure || depth_capped || n < 2 * params_.min_samples_leaf) return id;

        const SplitChoice split = best_gini_split(rows, pos);
        if (!split.found) return id;

        std::vector<std::size_t> left, right;
        left.reserve(n);
        right.reserve(n);
        for (std::size_t r : rows)
            (X_(r, split.feature) < split.threshold ? left : right).push_back(r);

        nodes_[id].feature = static_cast<int>(split.feature);
        nodes_[id].threshold = split.threshold;
        const int l = grow(left, depth + 1);
        nodes_[id].left = l;
        const int r = grow(right, depth + 1);
        nodes_[id].right = r;
        return id;
    }

    SplitChoice best_gini_split(const std::vector<std::size_t>& rows,
                                std::size_t pos_total) {
        const std::size_t n = rows.size();
        const double parent =
            gini_impurity(n - pos_total, pos_total) * static_cast<double>(n);
        SplitChoice best;

        choose_features(X_.cols, params_.max_features, rng_, features_);
        for (std::size_t f : features_) {
            sorted_.clear();
            for (std::size_t r : rows) sorted_.emplace_back(X_(r, f), y_[r]);
            std::sort(sorted_.begin(), sorted_.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });

            std::size_t pos_left = 0;
            for (std::size_t i = 1; i < n; ++i) {
                pos_left += (sorted_[i - 1].second == 1);
                if (sorted_[i].first == sorted_[i - 1].first) continue;
                if (i < params_.min_samples_leaf || n - i < params_.min_samples_leaf)
                    continue;
                const std::size_t nl = i, nr = n - i;
                const std::size_t pos_right = pos_total - pos_left;
                // Impurity decrease scaled by n; strictly-greater keeps the
                // first (lowest feature, lowest threshold) winner on ties.
                const double children =
                    gini_impurity(nl - pos_left, pos_left) * static_cast<double>(nl) +
                    gini_impurity(nr - pos_right, pos_right) * static_cast<double>(nr);
                const double gain = parent - children;
                if (gain > best.gain && gain > 0.0) {
                    best.found = true;
                    best.feature = f;
                    best.threshold =
                        separating_threshold(sorted_[i - 1].first, sorted_[i].first);
                    best.gain = gain;
                }
            }
        }
        return best;
    }

    const Matrix& X_;
    const std::vector<int>& y_;
    TreeParams params_;
    Rng* rng_;
    std::vector<TreeNode> nodes_;
    std::vector<std::size_t> features_;
    std::vector<std::pair<double, int>> sorted_;
};

class GhTreeBuilder {
public:
    GhTreeBuilder(const Matrix& X, const std::vector<double>& g,
                  const std::vector<double>& h, const BoostTreeParams& params)
        : X_(X), g_(g), h_(h), params_(params) {}

    std::vector<TreeNode> build(const std::vector<std::size_t>& rows) {
        nodes_.clear();
        grow(rows, 0);
        return std::move(nodes_);
    }

private:
    double leaf_value(double sum_g, double sum_h) const {
        if (params_.mode == GainMode::xgb)
            return -sum_g / (sum_h + params_.lambda);
        // Newton step for the variance-split tree; a saturated leaf with
        // vanishing curvature contributes nothing.
        if (sum_h < 1e-12) return 0.0;
        return sum_g / sum_h;
    }

    int grow(const std::vector<std::size_t>& rows, int depth) {
        const int id = static_cast<int>(nodes_.size());
        nodes_.emplace_back();

        double sum_g = 0.0, sum_h = 0.0;
        for (std::size_t r : rows) {
            sum_g += g_[r];
            sum_h += h_[r];
        }
        nodes_[id].value = leaf_value(sum_g, sum_h);

        const std::size_t n = rows.size();
        const bool depth_capped = params_.max_depth > 0 && depth >= params_.max_depth;
        if (depth_capped || n < 2 * params_.min_samples_leaf) return id;

        const SplitChoice split = best_split(rows, sum_g, sum_h);
        if (!split.found) return id;

        std::vector<std::size_t> left, right;
        left.reserve(n);
        right.reserve(n);
        for (std::size_t r : rows)
            (X_(r, split.feature) < split.threshold ? left : right).push_back(r);

        nodes_[id].feature = static_cast<int>(split.feature);
        nodes_[id].threshold = split.threshold;
        const int l = grow(left, depth + 1);
        nodes_[id].left = l;
        const int r = grow(right, depth + 1);
        nodes_[id].right = r;
        return id;
    }

    SplitChoice best_split(const std::vector<std::size_t>& rows, double sum_g,
                           double sum_h) {
        const std::size_t n = rows.size();
        SplitChoice best;
        for (std::size_t f = 0; f < X_.cols; ++f) {
            sorted_.clear();
            for (std::size_t r : rows) sorted_.push_back({X_(r, f), g_[r], h_[r]});
            std::sort(sorted_.begin(), sorted_.end(),
                      [](const Entry& a, const Entry& b) { return a.value < b.value; });

            double gl = 0.0, hl = 0.0;
            for (std::size_t i = 1; i < n; ++i) {
                gl += sorted_[i - 1].g;
                hl += sorted_[i - 1].h;
                if (sorted_[i].value == sorted_[i - 1].value) continue;
                if (i < params_.min_samples_leaf || n - i < params_.min_samples_leaf)
                    continue;
                const double gr = sum_g - gl, hr = sum_h - hl;
                double gain;
                if (params_.mode == GainMode::xgb) {
                    if (hl + params_.lambda <= 0.0 || hr + params_.lambda <= 0.0)
                        continue;
                    gain = xgb_split_gain(gl, hl, gr, hr, params_.lambda, params_.gamma);
                } else {
                    // SSE reduction on g, expressed through sums only.
                    const double nl = static_cast<double>(i);
                    const double nr = static_cast<double>(n - i);
                    gain = gl * gl / nl + gr * gr / nr - sum_g * sum_g / static_cast<double>(n);
                }
                if (gain > best.gain && gain > 0.0) {
                    best.found = true;
                    best.feature = f;
                    best.threshold =
                        separating_threshold(sorted_[i - 1].value, sorted_[i].value);
                    best.gain = gain;
                }
            }
        }
        return best;
    }

    struct Entry {
        double value;
        double g;
        double h;
    };

    const Matrix& X_;
    const std::vector<double>& g_;
    const std::vector<double>& h_;
    BoostTreeParams params_;
    std::vector<TreeNode> nodes_;
    std::vector<Entry> sorted_;
};

}  // namespace

std::vector<TreeNode> fit_class_tree(const Matrix& X, const std::vector<int>& y,
                                     const std::vector<std::size_t>& rows,
                                     const TreeParams& params, Rng* feature_rng) {
    return ClassTreeBuilder(X, y, params, feature_rng).build(rows);
}

std::vector<TreeNode> fit_gh_tree(const Matrix& X, const std::vector<double>& g,
                                  const std::vector<double>& h,
                                  const std::vector<std::size_t>& rows,
                                  const BoostTreeParams& params) {
    return GhTreeBuilder(X, g, h, params).build(rows);
}

}  // namespace stacktier::detail
