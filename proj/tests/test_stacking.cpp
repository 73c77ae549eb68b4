#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "stacktier/common.hpp"
#include "stacktier/metrics.hpp"
#include "stacktier/model_io.hpp"
#include "stacktier/stacking.hpp"
#include "test_support.hpp"

using namespace stacktier;

namespace {

// Cheap two-family configuration for unit-scale stacking checks.
StackingConfig small_config() {
    StackingConfig cfg;
    cfg.families = {Family::gbm, Family::linear_svc};
    cfg.grids[Family::gbm] = {
        {Family::gbm, {{"n_rounds", 8}, {"learning_rate", 0.3}, {"max_depth", 2}}},
        {Family::gbm, {{"n_rounds", 4}, {"learning_rate", 0.1}, {"max_depth", 2}}},
    };
    cfg.grids[Family::linear_svc] = {
        {Family::linear_svc, {{"C", 1.0}, {"epochs", 10}}},
    };
    cfg.folds = 3;
    cfg.combiner = CombinerKind::lr;
    cfg.meta = CombinerKind::lr;
    return cfg;
}

}  // namespace

TEST_CASE("oof entries come from fold-complement models") {
    // k=2, 4 rows: recompute each fold's model by hand and compare
    auto ds = test_support::random_labeled_dataset(1, 4, 2, 0.0);
    ds.labels = {1, 0, 1, 0};
    FoldPlan folds;
    folds.k = 2;
    folds.assignment = {0, 0, 1, 1};

    const LearnerSpec spec{Family::logreg, {{"l2", 0.5}}};
    const auto mf = oof_meta_features({spec}, ds, folds, 77);
    CHECK(mf.values.rows == 4);
    CHECK(mf.values.cols == 1);
    CHECK(mf.fold_plan_id == folds.id());
    CHECK(mf.spec_ids == std::vector<std::string>{spec.spec_id()});

    for (int f = 0; f < 2; ++f) {
        const auto train = ds.subset_rows(folds.complement_rows(f));
        const auto model =
            fit_learner(spec, train.values, train.labels,
                        derive_seed(77ull, "oof", spec.spec_id(),
                                    static_cast<std::uint64_t>(f)));
        const auto eval_rows = folds.fold_rows(f);
        const auto scores =
            predict_score(model, ds.values.select_rows(eval_rows));
        for (std::size_t i = 0; i < eval_rows.size(); ++i)
            CHECK(mf.values(eval_rows[i], 0) == scores[i]);
    }
}

TEST_CASE("flipping a row's label leaves that row's oof features bit-identical") {
    const auto ds = test_support::random_labeled_dataset(13, 36, 3);
    const auto folds = make_folds(ds, 3, 5);
    const std::vector<LearnerSpec> specs = {
        {Family::gbm, {{"n_rounds", 5}, {"max_depth", 2}}},
        {Family::logreg, {}},
    };
    const auto base = oof_meta_features(specs, ds, folds, 21);

    for (std::size_t flip : {std::size_t{2}, std::size_t{17}, std::size_t{30}}) {
        Dataset flipped = ds;
        flipped.labels[flip] = 1 - flipped.labels[flip];
        // guard: both classes must survive in every training complement
        const auto mf = oof_meta_features(specs, flipped, folds, 21);
        for (std::size_t j = 0; j < specs.size(); ++j)
            CHECK(mf.values(flip, j) == base.values(flip, j));
    }
}

TEST_CASE("internal stack with one member and LR combiner preserves ranking") {
    const auto ds = test_support::random_labeled_dataset(31, 90, 4, 1.0);
    const auto folds = make_folds(ds, 3, 9);

    StackingConfig cfg = small_config();
    cfg.grids[Family::gbm] = {
        {Family::gbm, {{"n_rounds", 8}, {"learning_rate", 0.3}, {"max_depth", 2}}}};
    const auto stack = fit_internal_stack(Family::gbm, ds, folds, cfg, 3);
    CHECK(stack.member_specs.size() == 1);
    CHECK(stack.members.size() == 1);

    const auto eval = test_support::random_labeled_dataset(32, 60, 4, 1.0);
    const auto member_scores = predict_score(stack.members[0], eval.values);
    const auto stack_scores = predict_internal(stack, eval.values);
    CHECK(stack_scores.size() == eval.n_rows());
    for (double s : stack_scores) {
        CHECK(s >= 0.0);
        CHECK(s <= 1.0);
    }
    CHECK(roc_auc(stack_scores, eval.labels) ==
          doctest::Approx(roc_auc(member_scores, eval.labels)).epsilon(1e-12));
}

TEST_CASE("member count stays within the policy bound") {
    const auto ds = test_support::random_labeled_dataset(41, 90, 4);
    const auto folds = make_folds(ds, 3, 2);
    const StackingConfig cfg = small_config();
    const auto stack = fit_internal_stack(Family::gbm, ds, folds, cfg, 5);
    CHECK(stack.member_specs.size() >= 1);
    CHECK(stack.member_specs.size() <= 4);  // four metrics x top-1
    for (const auto& spec : stack.member_specs) CHECK(spec.family == Family::gbm);
}

TEST_CASE("predict_internal equals combiner over member columns bit-exactly") {
    const auto ds = test_support::random_labeled_dataset(51, 80, 4, 1.0);
    const auto folds = make_folds(ds, 3, 8);
    StackingConfig cfg = small_config();
    cfg.combiner = CombinerKind::rf;
    cfg.combiner_forest_trees = 20;
    const auto stack = fit_internal_stack(Family::gbm, ds, folds, cfg, 11);

    const auto eval = test_support::random_labeled_dataset(52, 40, 4);
    Matrix member_columns(eval.n_rows(), stack.members.size());
    for (std::size_t j = 0; j < stack.members.size(); ++j) {
        const auto s = predict_score(stack.members[j], eval.values);
        for (std::size_t r = 0; r < eval.n_rows(); ++r) member_columns(r, j) = s[r];
    }
    const auto via_stack = predict_internal(stack, eval.values);
    const auto via_columns = predict_score(stack.combiner, member_columns);
    CHECK(via_stack == via_columns);
}

TEST_CASE("two-level model: structure, identities, determinism") {
    const auto train = test_support::random_labeled_dataset(61, 90, 4, 1.0);
    const StackingConfig cfg = small_config();
    const auto prep = Preprocessing::identity(train.feature_names);

    const auto model = fit_two_level(train, cfg, prep, 17);
    CHECK(model.stacks.size() == cfg.families.size());

    // structural identity: manual composition is bit-identical
    const auto eval = test_support::random_labeled_dataset(62, 50, 4, 1.0);
    const auto scores = predict_two_level(model, eval);
    Matrix meta_inputs(eval.n_rows(), model.stacks.size());
    for (std::size_t i = 0; i < model.stacks.size(); ++i) {
        const auto column = predict_internal(model.stacks[i], eval.values);
        for (std::size_t r = 0; r < eval.n_rows(); ++r) meta_inputs(r, i) = column[r];
    }
    CHECK(scores == predict_score(model.meta, meta_inputs));

    // batch scoring equals row-by-row scoring
    for (std::size_t r = 0; r < 5; ++r) {
        const auto row = eval.subset_rows({r});
        CHECK(predict_two_level(model, row)[0] == scores[r]);
    }

    // determinism: same seed, same serialized artifact
    const auto again = fit_two_level(train, cfg, prep, 17);
    CHECK(model_payload_json(model) == model_payload_json(again));

    // thread count does not change the artifact
    const auto threaded = fit_two_level(train, cfg, prep, 17, 4);
    CHECK(model_payload_json(model) == model_payload_json(threaded));
}

TEST_CASE("all four combiner configurations are constructible") {
    const auto train = test_support::random_labeled_dataset(71, 72, 3, 1.0);
    const auto prep = Preprocessing::identity(train.feature_names);
    StackingConfig cfg = small_config();
    cfg.combiner_forest_trees = 10;
    for (const auto combiner : {CombinerKind::lr, CombinerKind::rf}) {
        for (const auto meta : {CombinerKind::lr, CombinerKind::rf}) {
            cfg.combiner = combiner;
            cfg.meta = meta;
            const auto model = fit_two_level(train, cfg, prep, 5);
            CHECK(model.meta_kind == meta);
            for (const auto& stack : model.stacks)
                CHECK(stack.combiner_kind == combiner);
            const auto scores = predict_two_level(model, train);
            CHECK(scores.size() == train.n_rows());
        }
    }
}

TEST_CASE("one-level baseline pools the per-family winners") {
    const auto train = test_support::random_labeled_dataset(81, 90, 4, 1.0);
    const auto prep = Preprocessing::identity(train.feature_names);
    const StackingConfig cfg = small_config();

    const auto one = fit_one_level(train, cfg, prep, 23);
    CHECK(one.members.size() == one.member_specs.size());
    CHECK(one.member_specs.size() >= cfg.families.size());  // >= 1 per family

    const auto scores = predict_one_level(one, train);
    CHECK(scores.size() == train.n_rows());
    for (double s : scores) {
        CHECK(s >= 0.0);
        CHECK(s <= 1.0);
    }
}

TEST_CASE("one family, one config: one- and two-level rank identically") {
    const auto train = test_support::random_labeled_dataset(91, 80, 3, 1.0);
    const auto prep = Preprocessing::identity(train.feature_names);
    StackingConfig cfg;
    cfg.families = {Family::gbm};
    cfg.grids[Family::gbm] = {
        {Family::gbm, {{"n_rounds", 8}, {"learning_rate", 0.3}, {"max_depth", 2}}}};
    cfg.folds = 3;
    cfg.combiner = CombinerKind::lr;
    cfg.meta = CombinerKind::lr;

    const auto two = fit_two_level(train, cfg, prep, 7);
    const auto one = fit_one_level(train, cfg, prep, 7);

    const auto eval = test_support::random_labeled_dataset(92, 50, 3, 1.0);
    const auto s_two = predict_two_level(two, eval);
    const auto s_one = predict_one_level(one, eval);
    CHECK(roc_auc(s_two, eval.labels) ==
          doctest::Approx(roc_auc(s_one, eval.labels)).epsilon(1e-12));
}
