#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "stacktier/matrix.hpp"

namespace stacktier {

enum class Family { tree, random_forest, gbm, xgb, linear_svc, logreg };

std::string family_name(Family f);
Family family_from_name(const std::string& name);

/// One hyperparameter configuration of a learner family. spec_id() is a
/// canonical stable encoding of (family, sorted hyperparameters) used
/// for ordering, deduplication, and seed derivation.
struct LearnerSpec {
    Family family = Family::tree;
    std::map<std::string, double> params;  // sorted keys -> canonical id

    std::string spec_id() const;
    double param(const std::string& name, double fallback) const;

    bool operator==(const LearnerSpec& other) const {
        return family == other.family && params == other.params;
    }
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;  // leaf payload: positive fraction or margin term
};

/// Trained parameters of one learner. Tree families fill `trees`,
/// linear families fill `weights`/`bias`.
struct FittedModel {
    Family family = Family::tree;
    std::size_t n_features = 0;
    std::uint64_t train_seed = 0;
    bool converged = true;

    std::vector<std::vector<TreeNode>> trees;
    double base_margin = 0.0;  // gbm/xgb additive start (logit of prevalence)

    std::vector<double> weights;
    double bias = 0.0;
    double calibration = 1.0;  // linear_svc sigmoid slope
};

/// Routes x down a single tree; descends left when x[feature] < threshold.
double tree_predict(const std::vector<TreeNode>& tree, std::span<const double> x);

/// 1 - p0^2 - p1^2 over the two class counts; in [0, 0.5].
double gini_impurity(std::size_t count0, std::size_t count1);

/// Second-order split gain
///   0.5 * [GL^2/(HL+l) + GR^2/(HR+l) - (GL+GR)^2/(HL+HR+l)] - gamma.
double xgb_split_gain(double grad_left, double hess_left, double grad_right,
                      double hess_right, double lambda, double gamma);

FittedModel fit_learner(const LearnerSpec& spec, const Matrix& X,
                        const std::vector<int>& y, std::uint64_t seed,
                        int threads = 1);

/// Scores in [0, 1], one per row of X.
std::vector<double> predict_score(const FittedModel& model, const Matrix& X);

/// Regularized logistic loss and its gradient at (weights, bias);
/// the objective fit_learner minimizes for the logreg family.
double logreg_loss_gradient(const Matrix& X, const std::vector<int>& y,
                            const std::vector<double>& weights, double bias,
                            double l2, std::vector<double>* grad_w,
                            double* grad_b);

inline double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

}  // namespace stacktier
