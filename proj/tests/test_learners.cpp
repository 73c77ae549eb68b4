#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "stacktier/common.hpp"
#include "stacktier/learner.hpp"
#include "stacktier/model_io.hpp"
#include "test_support.hpp"

using namespace stacktier;

namespace {

double mean_logistic_loss(const std::vector<double>& margins,
                          const std::vector<int>& y) {
    double loss = 0.0;
    for (std::size_t i = 0; i < margins.size(); ++i) {
        const double m = (y[i] == 1 ? 1.0 : -1.0) * margins[i];
        loss += m > 0.0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m));
    }
    return loss / static_cast<double>(margins.size());
}

double training_accuracy(const FittedModel& model, const Matrix& X,
                         const std::vector<int>& y) {
    const auto scores = predict_score(model, X);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < scores.size(); ++i)
        correct += ((scores[i] >= 0.5) == (y[i] == 1));
    return static_cast<double>(correct) / static_cast<double>(y.size());
}

}  // namespace

TEST_CASE("gini_impurity examples") {
    CHECK(gini_impurity(5, 5) == doctest::Approx(0.5));
    CHECK(gini_impurity(10, 0) == 0.0);
    CHECK(gini_impurity(1, 3) == doctest::Approx(0.375));
    CHECK_THROWS_AS(gini_impurity(0, 0), Error);
}

TEST_CASE("xgb_split_gain examples") {
    CHECK(xgb_split_gain(0, 1, 0, 1, 0, 0.7) == doctest::Approx(-0.7));
    CHECK(xgb_split_gain(1, 1, -1, 1, 0, 0) == doctest::Approx(1.0));
    // left/right symmetry
    CHECK(xgb_split_gain(0.4, 0.9, -1.3, 2.0, 1.5, 0.2) ==
          doctest::Approx(xgb_split_gain(-1.3, 2.0, 0.4, 0.9, 1.5, 0.2)));
    CHECK_THROWS_AS(xgb_split_gain(1, 0, 1, 1, 0, 0), Error);
}

TEST_CASE("unrestricted tree memorizes label-consistent data") {
    const auto ds = test_support::random_labeled_dataset(17, 48, 4);
    const LearnerSpec spec{Family::tree, {}};
    const auto model = fit_learner(spec, ds.values, ds.labels, 1);
    CHECK(training_accuracy(model, ds.values, ds.labels) == 1.0);
}

TEST_CASE("tree grown to purity reproduces 1-NN labels at training points") {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        const std::size_t n = 16 + 6 * seed;  // up to 58 rows, duplicate-free w.h.p.
        const auto ds = test_support::random_labeled_dataset(seed + 100, n, 3);
        const LearnerSpec spec{Family::tree, {}};
        const auto model = fit_learner(spec, ds.values, ds.labels, 1);
        const auto scores = predict_score(model, ds.values);
        for (std::size_t i = 0; i < n; ++i) {
            // brute-force nearest neighbor (self at distance zero)
            std::size_t nearest = i;
            double best = 1e300;
            for (std::size_t j = 0; j < n; ++j) {
                double d2 = 0.0;
                for (std::size_t c = 0; c < 3; ++c) {
                    const double d = ds.values(i, c) - ds.values(j, c);
                    d2 += d * d;
                }
                if (d2 < best) {
                    best = d2;
                    nearest = j;
                }
            }
            CHECK(scores[i] == static_cast<double>(ds.labels[nearest]));
        }
    }
}

TEST_CASE("single-class input: constant trees, errors for margin learners") {
    auto ds = test_support::random_labeled_dataset(3, 20, 3);
    std::fill(ds.labels.begin(), ds.labels.end(), 1);
    const auto tree = fit_learner(LearnerSpec{Family::tree, {}}, ds.values, ds.labels, 1);
    for (double s : predict_score(tree, ds.values)) CHECK(s == 1.0);
    const auto forest = fit_learner(LearnerSpec{Family::random_forest, {{"n_trees", 5}}},
                                    ds.values, ds.labels, 1);
    for (double s : predict_score(forest, ds.values)) CHECK(s == 1.0);
    CHECK_THROWS_AS(fit_learner(LearnerSpec{Family::gbm, {}}, ds.values, ds.labels, 1),
                    Error);
    CHECK_THROWS_AS(
        fit_learner(LearnerSpec{Family::logreg, {}}, ds.values, ds.labels, 1), Error);
}

TEST_CASE("gbm with zero rounds scores the positive prevalence") {
    const auto ds = test_support::random_labeled_dataset(5, 40, 3);
    const double prevalence = static_cast<double>(ds.positive_count()) / 40.0;
    const LearnerSpec spec{Family::gbm, {{"n_rounds", 0}}};
    const auto model = fit_learner(spec, ds.values, ds.labels, 1);
    for (double s : predict_score(model, ds.values))
        CHECK(s == doctest::Approx(prevalence).epsilon(1e-12));
}

TEST_CASE("boosted margin maps through the sigmoid") {
    // A constant-leaf stub reproduces sigmoid(0.847) =~ 0.6999
    FittedModel stub;
    stub.family = Family::gbm;
    stub.n_features = 1;
    stub.base_margin = 0.847;
    Matrix X(1, 1);
    const auto s = predict_score(stub, X);
    CHECK(s[0] == doctest::Approx(1.0 / (1.0 + std::exp(-0.847))).epsilon(1e-12));
    CHECK(s[0] == doctest::Approx(0.6999).epsilon(1e-3));
}

TEST_CASE("gbm and xgb training loss is non-increasing per round") {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        const auto ds = test_support::random_labeled_dataset(seed + 40, 60, 4, 1.5);
        for (const Family family : {Family::gbm, Family::xgb}) {
            LearnerSpec spec{family,
                             {{"n_rounds", 40}, {"learning_rate", 0.3}, {"max_depth", 2}}};
            const auto model = fit_learner(spec, ds.values, ds.labels, seed);
            std::vector<double> margins(ds.n_rows(), model.base_margin);
            double prev = mean_logistic_loss(margins, ds.labels);
            for (const auto& tree : model.trees) {
                for (std::size_t i = 0; i < ds.n_rows(); ++i)
                    margins[i] += tree_predict(tree, ds.values.row(i));
                const double cur = mean_logistic_loss(margins, ds.labels);
                CHECK(cur <= prev + 1e-12);
                prev = cur;
            }
        }
    }
}

TEST_CASE("boosted score order equals margin order (sigmoid is monotone)") {
    const auto ds = test_support::random_labeled_dataset(77, 50, 4);
    const LearnerSpec spec{Family::gbm, {{"n_rounds", 20}, {"learning_rate", 0.1}}};
    const auto model = fit_learner(spec, ds.values, ds.labels, 2);
    const auto scores = predict_score(model, ds.values);
    std::vector<double> margins(ds.n_rows(), model.base_margin);
    for (const auto& tree : model.trees)
        for (std::size_t i = 0; i < ds.n_rows(); ++i)
            margins[i] += tree_predict(tree, ds.values.row(i));
    for (std::size_t i = 0; i < ds.n_rows(); ++i)
        for (std::size_t j = i + 1; j < ds.n_rows(); ++j) {
            if (margins[i] < margins[j]) CHECK(scores[i] <= scores[j]);
            if (margins[i] > margins[j]) CHECK(scores[i] >= scores[j]);
        }
}

TEST_CASE("logreg gradient matches central finite differences") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto ds = test_support::random_labeled_dataset(seed + 500, 12, 3);
        Rng rng(seed);
        std::vector<double> w(3);
        for (auto& v : w) v = rng.next_normal();
        const double b = rng.next_normal();
        const double l2 = 0.1;

        std::vector<double> grad(3);
        double grad_b = 0.0;
        logreg_loss_gradient(ds.values, ds.labels, w, b, l2, &grad, &grad_b);

        const double eps = 1e-6;
        for (std::size_t c = 0; c < 3; ++c) {
            auto wp = w, wm = w;
            wp[c] += eps;
            wm[c] -= eps;
            const double fd =
                (logreg_loss_gradient(ds.values, ds.labels, wp, b, l2, nullptr, nullptr) -
                 logreg_loss_gradient(ds.values, ds.labels, wm, b, l2, nullptr, nullptr)) /
                (2.0 * eps);
            CHECK(std::abs(fd - grad[c]) <=
                  1e-5 * std::max({1.0, std::abs(fd), std::abs(grad[c])}));
        }
        const double fdb =
            (logreg_loss_gradient(ds.values, ds.labels, w, b + eps, l2, nullptr, nullptr) -
             logreg_loss_gradient(ds.values, ds.labels, w, b - eps, l2, nullptr, nullptr)) /
            (2.0 * eps);
        CHECK(std::abs(fdb - grad_b) <=
              1e-5 * std::max({1.0, std::abs(fdb), std::abs(grad_b)}));
    }
}

TEST_CASE("logreg reaches its gradient tolerance") {
    const auto ds = test_support::random_labeled_dataset(9, 80, 4);
    const double tol = 1e-8;
    LearnerSpec spec{Family::logreg, {{"l2", 0.05}, {"tol", tol}}};
    const auto model = fit_learner(spec, ds.values, ds.labels, 1);
    CHECK(model.converged);
    std::vector<double> grad(4);
    double grad_b = 0.0;
    logreg_loss_gradient(ds.values, ds.labels, model.weights, model.bias, 0.05,
                         &grad, &grad_b);
    double gnorm = std::abs(grad_b);
    for (double g : grad) gnorm = std::max(gnorm, std::abs(g));
    CHECK(gnorm <= tol);
}

TEST_CASE("logreg with zero weights scores one half everywhere") {
    FittedModel zero;
    zero.family = Family::logreg;
    zero.n_features = 2;
    zero.weights = {0.0, 0.0};
    zero.bias = 0.0;
    Matrix X(3, 2);
    X(0, 0) = -5.0;
    X(1, 1) = 2.0;
    X(2, 0) = 7.0;
    for (double s : predict_score(zero, X)) CHECK(s == 0.5);
}

TEST_CASE("linear svc separates margin-1 data; threshold oracle agrees") {
    // two clusters separated by a corridor of width 2 around y = 0
    Matrix X(8, 2);
    std::vector<int> y(8);
    const double pts[8][2] = {{0.0, 1.5},  {1.0, 2.0},  {-1.0, 1.2},  {0.5, 3.0},
                              {0.0, -1.5}, {1.0, -2.0}, {-1.0, -1.2}, {0.5, -3.0}};
    for (std::size_t i = 0; i < 8; ++i) {
        X(i, 0) = pts[i][0];
        X(i, 1) = pts[i][1];
        y[i] = i < 4 ? 1 : 0;
    }
    LearnerSpec spec{Family::linear_svc, {{"C", 10.0}, {"epochs", 200}}};
    const auto model = fit_learner(spec, X, y, 3);
    CHECK(training_accuracy(model, X, y) == 1.0);

    // oracle: exhaustive threshold search on the learned projection must
    // also reach perfect accuracy
    std::vector<double> projection(8);
    for (std::size_t i = 0; i < 8; ++i)
        projection[i] = model.weights[0] * X(i, 0) + model.weights[1] * X(i, 1);
    std::size_t best_correct = 0;
    for (std::size_t t = 0; t < 8; ++t) {
        std::size_t correct = 0;
        for (std::size_t i = 0; i < 8; ++i)
            correct += ((projection[i] >= projection[t]) == (y[i] == 1));
        best_correct = std::max(best_correct, correct);
    }
    CHECK(best_correct == 8);
}

TEST_CASE("forest unanimity and score range") {
    const auto ds = test_support::random_labeled_dataset(33, 40, 3, 0.0);
    LearnerSpec spec{Family::random_forest, {{"n_trees", 15}}};
    const auto model = fit_learner(spec, ds.values, ds.labels, 4);
    const auto scores = predict_score(model, ds.values);
    for (double s : scores) {
        CHECK(s >= 0.0);
        CHECK(s <= 1.0);
    }
    // noise-free labels: deep bootstrap trees agree on most training rows
    auto separated = Dataset::with_shape({"v"}, 20);
    for (std::size_t r = 0; r < 20; ++r) {
        separated.values(r, 0) = r < 10 ? -1.0 - static_cast<double>(r) : 1.0 + static_cast<double>(r);
        separated.labels[r] = r < 10 ? 0 : 1;
    }
    const auto unanimous = fit_learner(spec, separated.values, separated.labels, 4);
    Matrix far(1, 1);
    far(0, 0) = 100.0;
    CHECK(predict_score(unanimous, far)[0] == 1.0);
    far(0, 0) = -100.0;
    CHECK(predict_score(unanimous, far)[0] == 0.0);
}

TEST_CASE("all families emit scores in [0,1] on random data") {
    const auto ds = test_support::random_labeled_dataset(55, 50, 4);
    const std::vector<LearnerSpec> specs = {
        {Family::tree, {{"max_depth", 4}}},
        {Family::random_forest, {{"n_trees", 10}}},
        {Family::gbm, {{"n_rounds", 10}}},
        {Family::xgb, {{"n_rounds", 10}}},
        {Family::linear_svc, {}},
        {Family::logreg, {}},
    };
    for (const auto& spec : specs) {
        const auto model = fit_learner(spec, ds.values, ds.labels, 6);
        for (double s : predict_score(model, ds.values)) {
            CHECK(s >= 0.0);
            CHECK(s <= 1.0);
        }
    }
}

TEST_CASE("same seed gives identical serialized models for any thread count") {
    const auto ds = test_support::random_labeled_dataset(66, 60, 5);
    LearnerSpec spec{Family::random_forest, {{"n_trees", 12}}};
    const auto one = fit_learner(spec, ds.values, ds.labels, 9, 1);
    const auto four = fit_learner(spec, ds.values, ds.labels, 9, 4);
    CHECK(fitted_model_json(one) == fitted_model_json(four));

    const auto again = fit_learner(spec, ds.values, ds.labels, 9, 2);
    CHECK(fitted_model_json(one) == fitted_model_json(again));
}

TEST_CASE("spec validation rejects bad hyperparameters") {
    const auto ds = test_support::random_labeled_dataset(8, 20, 2);
    CHECK_THROWS_AS(fit_learner(LearnerSpec{Family::gbm, {{"learning_rate", -0.1}}},
                                ds.values, ds.labels, 1),
                    Error);
    CHECK_THROWS_AS(fit_learner(LearnerSpec{Family::gbm, {{"n_trees", 10}}}, ds.values,
                                ds.labels, 1),
                    Error);  // n_trees is not a gbm knob
    CHECK_THROWS_AS(fit_learner(LearnerSpec{Family::linear_svc, {{"C", 0.0}}},
                                ds.values, ds.labels, 1),
                    Error);
}

TEST_CASE("predict_score rejects feature-count mismatches") {
    const auto ds = test_support::random_labeled_dataset(12, 20, 3);
    const auto model = fit_learner(LearnerSpec{Family::tree, {}}, ds.values, ds.labels, 1);
    Matrix wrong(2, 5);
    CHECK_THROWS_AS(predict_score(model, wrong), Error);
}

TEST_CASE("spec_id is canonical and order-independent") {
    LearnerSpec a{Family::gbm, {{"n_rounds", 100}, {"learning_rate", 0.1}}};
    LearnerSpec b{Family::gbm, {{"learning_rate", 0.1}, {"n_rounds", 100}}};
    CHECK(a.spec_id() == b.spec_id());
    CHECK(a.spec_id() == "gbm|learning_rate=0.1|n_rounds=100");
}

TEST_CASE("logreg returns the best iterate with a cleared flag at the cap") {
    const auto ds = test_support::random_labeled_dataset(14, 40, 3);
    LearnerSpec spec{Family::logreg, {{"max_iter", 1}, {"tol", 1e-14}}};
    const auto model = fit_learner(spec, ds.values, ds.labels, 1);
    CHECK_FALSE(model.converged);
    for (double s : predict_score(model, ds.values)) {
        CHECK(s >= 0.0);
        CHECK(s <= 1.0);
    }
}
