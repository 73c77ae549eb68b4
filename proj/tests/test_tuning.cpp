#include <doctest.h>

#include <algorithm>

#include "stacktier/common.hpp"
#include "stacktier/tuning.hpp"
#include "test_support.hpp"

using namespace stacktier;

namespace {

Dataset even_fold_dataset() {
    // 100 rows, 40 positive: every one of 5 folds gets 8 pos / 12 neg
    auto ds = test_support::random_labeled_dataset(44, 100, 3);
    for (std::size_t r = 0; r < 100; ++r) ds.labels[r] = r < 40 ? 1 : 0;
    return ds;
}

ConfigScore made_score(const LearnerSpec& spec, double accuracy, double recall) {
    ConfigScore s;
    s.spec = spec;
    s.cv_mean = {{"accuracy", accuracy},
                 {"precision", accuracy},
                 {"recall", recall},
                 {"roc_auc", accuracy}};
    return s;
}

}  // namespace

TEST_CASE("cv_score produces one value per fold per metric") {
    const auto ds = even_fold_dataset();
    const auto folds = make_folds(ds, 5, 2);
    const LearnerSpec spec{Family::logreg, {{"l2", 0.1}}};
    const auto score = cv_score(spec, ds, folds, 7);
    CHECK(score.valid);
    for (const auto& name : {"accuracy", "precision", "recall", "roc_auc"}) {
        CHECK(score.cv_fold_values.at(name).size() == 5);
        double sum = 0.0;
        for (double v : score.cv_fold_values.at(name)) sum += v;
        CHECK(score.cv_mean.at(name) == doctest::Approx(sum / 5.0));
    }
}

TEST_CASE("constant-score model: per-fold accuracy equals majority fraction") {
    const auto ds = even_fold_dataset();
    const auto folds = make_folds(ds, 5, 2);
    const LearnerSpec constant{Family::gbm, {{"n_rounds", 0}}};
    const auto score = cv_score(constant, ds, folds, 7);
    for (double v : score.cv_fold_values.at("accuracy"))
        CHECK(v == doctest::Approx(0.6));
}

TEST_CASE("cv_score is deterministic") {
    const auto ds = even_fold_dataset();
    const auto folds = make_folds(ds, 5, 2);
    const LearnerSpec spec{Family::tree, {{"max_depth", 3}}};
    const auto a = cv_score(spec, ds, folds, 9);
    const auto b = cv_score(spec, ds, folds, 9);
    CHECK(a.cv_mean == b.cv_mean);
    CHECK(a.cv_fold_values == b.cv_fold_values);
}

TEST_CASE("grid_search scores every spec in canonical order") {
    const auto ds = even_fold_dataset();
    const auto folds = make_folds(ds, 5, 2);
    std::vector<LearnerSpec> grid = {
        {Family::logreg, {{"l2", 1.0}}},
        {Family::logreg, {{"l2", 0.01}}},
        {Family::tree, {{"max_depth", 2}}},
        {Family::tree, {{"max_depth", 4}}},
    };
    const auto scores = grid_search(grid, ds, folds, 5);
    CHECK(scores.size() == 4);
    for (std::size_t i = 1; i < scores.size(); ++i)
        CHECK(scores[i - 1].spec.spec_id() < scores[i].spec.spec_id());

    // permutation of the grid leaves the output identical
    std::reverse(grid.begin(), grid.end());
    const auto permuted = grid_search(grid, ds, folds, 5);
    for (std::size_t i = 0; i < scores.size(); ++i) {
        CHECK(permuted[i].spec.spec_id() == scores[i].spec.spec_id());
        CHECK(permuted[i].cv_mean == scores[i].cv_mean);
    }

    // matches running cv_score individually
    for (const auto& s : scores) {
        const auto solo = cv_score(s.spec, ds, folds, 5);
        CHECK(solo.cv_mean == s.cv_mean);
    }

    CHECK_THROWS_AS(grid_search({}, ds, folds, 5), Error);
}

TEST_CASE("grid_search is thread-count independent") {
    const auto ds = even_fold_dataset();
    const auto folds = make_folds(ds, 5, 2);
    const std::vector<LearnerSpec> grid = {
        {Family::tree, {{"max_depth", 2}}},
        {Family::tree, {{"max_depth", 3}}},
        {Family::logreg, {}},
    };
    const auto one = grid_search(grid, ds, folds, 8, std::nullopt, 1);
    const auto four = grid_search(grid, ds, folds, 8, std::nullopt, 4);
    for (std::size_t i = 0; i < one.size(); ++i) {
        CHECK(one[i].cv_mean == four[i].cv_mean);
        CHECK(one[i].cv_fold_values == four[i].cv_fold_values);
    }
}

TEST_CASE("select_top_configs: dominance, disjoint winners, ties") {
    const LearnerSpec a{Family::gbm, {{"n_rounds", 10}}};
    const LearnerSpec b{Family::gbm, {{"n_rounds", 20}}};
    const LearnerSpec c{Family::gbm, {{"n_rounds", 30}}};
    const LearnerSpec d{Family::gbm, {{"n_rounds", 40}}};
    SelectionPolicy policy;  // four metrics, top 1 each

    // one config dominates everything -> m = 1
    auto selected = select_top_configs(
        {made_score(a, 0.9, 0.9), made_score(b, 0.5, 0.5)}, policy);
    CHECK(selected.size() == 1);
    CHECK(selected[0] == a);

    // distinct winners per metric -> union of all
    std::vector<ConfigScore> spread = {
        made_score(a, 0.9, 0.1), made_score(b, 0.1, 0.9)};
    spread[0].cv_mean["precision"] = 0.2;
    spread[1].cv_mean["precision"] = 0.8;
    spread[0].cv_mean["roc_auc"] = 0.99;
    spread[1].cv_mean["roc_auc"] = 0.01;
    selected = select_top_configs(spread, policy);
    CHECK(selected.size() == 2);

    // exact tie on every metric -> lower spec_id wins
    selected = select_top_configs(
        {made_score(d, 0.7, 0.7), made_score(c, 0.7, 0.7)}, policy);
    CHECK(selected.size() == 1);
    CHECK(selected[0] == c);  // "n_rounds=30" < "n_rounds=40"

    // per_metric_top widens the union bound
    policy.per_metric_top = 2;
    selected = select_top_configs(
        {made_score(a, 0.9, 0.9), made_score(b, 0.8, 0.8), made_score(c, 0.1, 0.1)},
        policy);
    CHECK(selected.size() == 2);
    CHECK(selected.size() <= policy.metrics.size() *
                                 static_cast<std::size_t>(policy.per_metric_top));

    CHECK_THROWS_AS(select_top_configs({}, policy), Error);
    SelectionPolicy bad;
    bad.metrics = {"f1"};  // not a selection metric
    CHECK_THROWS_AS(select_top_configs({made_score(a, 0.5, 0.5)}, bad), Error);
}

TEST_CASE("selected specs always come from the input grid") {
    const auto ds = even_fold_dataset();
    const auto folds = make_folds(ds, 5, 2);
    const std::vector<LearnerSpec> grid = {
        {Family::tree, {{"max_depth", 2}}},
        {Family::tree, {{"max_depth", 5}}},
        {Family::logreg, {{"l2", 0.01}}},
    };
    const auto scores = grid_search(grid, ds, folds, 3);
    const auto selected = select_top_configs(scores, SelectionPolicy{});
    CHECK(selected.size() >= 1);
    CHECK(selected.size() <= 4);
    for (const auto& spec : selected)
        CHECK(std::find(grid.begin(), grid.end(), spec) != grid.end());
}

TEST_CASE("enlarging the grid never worsens the best cv_mean") {
    const auto ds = even_fold_dataset();
    const auto folds = make_folds(ds, 5, 2);
    const std::vector<LearnerSpec> small = {{Family::tree, {{"max_depth", 2}}}};
    std::vector<LearnerSpec> large = small;
    large.push_back({Family::tree, {{"max_depth", 6}}});
    large.push_back({Family::logreg, {}});

    const auto small_scores = grid_search(small, ds, folds, 6);
    const auto large_scores = grid_search(large, ds, folds, 6);
    for (const auto& metric : {"accuracy", "precision", "recall", "roc_auc"}) {
        const auto best = [&](const std::vector<ConfigScore>& scores) {
            double m = 0.0;
            for (const auto& s : scores) m = std::max(m, s.cv_mean.at(metric));
            return m;
        };
        CHECK(best(large_scores) >= best(small_scores));
    }
}

TEST_CASE("default grids match the documented ranges") {
    CHECK(default_grid(Family::tree).size() == 4);
    CHECK(default_grid(Family::random_forest).size() == 2);
    CHECK(default_grid(Family::gbm).size() == 12);
    CHECK(default_grid(Family::xgb).size() == 48);
    CHECK(default_grid(Family::linear_svc).size() == 3);
    CHECK(default_grid(Family::logreg).size() == 2);
}

TEST_CASE("degenerate single-class folds invalidate the config") {
    auto ds = test_support::random_labeled_dataset(52, 30, 2, 0.0);
    for (std::size_t r = 0; r < 30; ++r) ds.labels[r] = r < 10 ? 1 : 0;
    // hand-built plan: fold 0 evaluates only negatives
    FoldPlan plan;
    plan.k = 3;
    plan.assignment.assign(30, 0);
    for (std::size_t r = 0; r < 30; ++r)
        plan.assignment[r] = r < 10 ? 1 + static_cast<int>(r % 2)
                                    : static_cast<int>(r % 3);
    bool fold0_has_positive = false;
    for (std::size_t r = 0; r < 10; ++r)
        fold0_has_positive |= (plan.assignment[r] == 0);
    REQUIRE_FALSE(fold0_has_positive);

    const LearnerSpec spec{Family::logreg, {}};
    const auto score = cv_score(spec, ds, plan, 4);
    CHECK_FALSE(score.valid);

    // a grid where every spec hits the degenerate fold is an error
    CHECK_THROWS_AS(grid_search({spec}, ds, plan, 4), Error);
}
