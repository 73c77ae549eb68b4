#include "stacktier/stacking.hpp"

#include <algorithm>

#include "stacktier/common.hpp"
#include "stacktier/metrics.hpp"
#include "stacktier/parallel.hpp"
#include "stacktier/rng.hpp"

namespace stacktier {

namespace {

FittedModel fit_combiner(CombinerKind kind, const Matrix& meta,
                         const std::vector<int>& labels, std::uint64_t seed,
                         const StackingConfig& config, int threads = 1) {
    LearnerSpec spec;
    if (kind == CombinerKind::lr) {
        spec.family = Family::logreg;
        spec.params["l2"] = config.combiner_l2;
    } else {
        spec.family = Family::random_forest;
        spec.params["n_trees"] = static_cast<double>(config.combiner_forest_trees);
    }
    return fit_learner(spec, meta, labels, seed, threads);
}

Dataset smote_if_configured(const Dataset& ds,
                            const std::optional<SmoteParams>& smote,
                            std::uint64_t seed) {
    if (!smote || !smote_needed(ds, *smote)) return ds;
    SmoteParams p = *smote;
    p.seed = seed;
    return smote_oversample(ds, p);
}

Matrix compact_rows(const Matrix& full, const std::vector<std::size_t>& rows) {
    return full.select_rows(rows);
}

std::vector<int> gather_labels(const std::vector<int>& labels,
                               const std::vector<std::size_t>& rows) {
    std::vector<int> out;
    out.reserve(rows.size());
    for (std::size_t r : rows) out.push_back(labels[r]);
    return out;
}

// Shared build steps of an internal stack: tuning, member selection,
// level-1 OOF matrix, combiner fit, and full-data member refits.
struct StackParts {
    InternalStack stack;
    MetaFeatures level1;
};

StackParts build_stack_parts(Family family, const Dataset& ds,
                             const FoldPlan& folds, const StackingConfig& config,
                             std::uint64_t seed, int threads) {
    const auto& grid = config.grid_for(family);
    const auto scores = grid_search(grid, ds, folds, derive_seed(seed, "grid"),
                                    config.smote, threads, config.threshold);
    if (config.tuning_sink != nullptr)
        config.tuning_sink->insert(config.tuning_sink->end(), scores.begin(),
                                   scores.end());
    auto specs = select_top_configs(scores, config.policy);

    StackParts parts;
    parts.level1 = oof_meta_features(specs, ds, folds, seed, config.smote, threads);
    parts.stack.family = family;
    parts.stack.member_specs = specs;
    parts.stack.combiner_kind = config.combiner;
    parts.stack.combiner = fit_combiner(config.combiner, parts.level1.values,
                                        ds.labels, derive_seed(seed, "combiner"),
                                        config, threads);

    const Dataset full =
        smote_if_configured(ds, config.smote, derive_seed(seed, "full_smote"));
    parts.stack.members.resize(specs.size());
    parallel_for(specs.size(), threads, [&](std::size_t j) {
        parts.stack.members[j] =
            fit_learner(specs[j], full.values, full.labels,
                        derive_seed(seed, "member_full", specs[j].spec_id()));
    });
    return parts;
}

// Leakage-free second-level OOF column for one family. Rows of fold f
// are scored by a fold-complement internal stack: members trained on
// complement(f), and the combiner trained on sub-OOF member scores
// within complement(f) (pairwise-complement models), so no model in the
// chain producing row r's column entry ever saw row r.
std::vector<double> level2_oof_column(const Dataset& ds, const FoldPlan& folds,
                                      const StackParts& parts,
                                      const StackingConfig& config,
                                      std::uint64_t seed, int threads) {
    const int k = folds.k;
    const auto& specs = parts.stack.member_specs;
    const std::size_t m = specs.size();
    const std::size_t n = ds.n_rows();

    std::vector<std::vector<std::size_t>> fold_rows(k);
    for (int f = 0; f < k; ++f) fold_rows[f] = folds.fold_rows(f);

    // sub_scores[f](r, j): member j's score on row r from the model
    // trained on complement{f, fold(r)}; defined for rows outside fold f.
    std::vector<Matrix> sub_scores(k, Matrix(n, m));

    struct PairTask {
        int f, g;
        std::size_t j;
    };
    std::vector<PairTask> tasks;
    for (int f = 0; f < k; ++f)
        for (int g = f + 1; g < k; ++g)
            for (std::size_t j = 0; j < m; ++j) tasks.push_back({f, g, j});

    parallel_for(tasks.size(), threads, [&](std::size_t ti) {
        const auto [f, g, j] = tasks[ti];
        const auto train_rows = folds.complement_rows(f, g);
        Dataset train = ds.subset_rows(train_rows);
        train = smote_if_configured(
            train, config.smote,
            derive_seed(seed, "pair_smote", specs[j].spec_id(),
                        static_cast<std::uint64_t>(f), static_cast<std::uint64_t>(g)));
        const FittedModel model = fit_learner(
            specs[j], train.values, train.labels,
            derive_seed(seed, "pair", specs[j].spec_id(),
                        static_cast<std::uint64_t>(f), static_cast<std::uint64_t>(g)));
        for (int held : {f, g}) {
            const int other = held == f ? g : f;
            const auto eval = compact_rows(ds.values, fold_rows[held]);
            const auto s = predict_score(model, eval);
            for (std::size_t i = 0; i < fold_rows[held].size(); ++i)
                sub_scores[other](fold_rows[held][i], j) = s[i];
        }
    });

    std::vector<double> column(n, 0.0);
    for (int f = 0; f < k; ++f) {
        const auto train_rows = folds.complement_rows(f);
        const FittedModel sub_combiner = fit_combiner(
            parts.stack.combiner_kind, compact_rows(sub_scores[f], train_rows),
            gather_labels(ds.labels, train_rows),
            derive_seed(seed, "sub_combiner", static_cast<std::uint64_t>(f)), config,
            threads);
        // Member scores of fold-f rows under the complement(f) models are
        // exactly the level-1 OOF entries; reuse them.
        const auto fold_scores = predict_score(
            sub_combiner, compact_rows(parts.level1.values, fold_rows[f]));
        for (std::size_t i = 0; i < fold_rows[f].size(); ++i)
            column[fold_rows[f][i]] = fold_scores[i];
    }
    return column;
}

Matrix member_score_matrix(const std::vector<FittedModel>& members, const Matrix& X) {
    Matrix meta(X.rows, members.size());
    for (std::size_t j = 0; j < members.size(); ++j) {
        const auto s = predict_score(members[j], X);
        for (std::size_t r = 0; r < X.rows; ++r) meta(r, j) = s[r];
    }
    return meta;
}

void check_families(const StackingConfig& config) {
    if (config.families.empty()) throw Error("stacking: no base families configured");
    for (Family f : config.families)
        if (f == Family::tree || f == Family::logreg)
            log_debug("stacking: family " + family_name(f) +
                      " is outside the default four-family set");
}

}  // namespace

std::string combiner_name(CombinerKind kind) {
    return kind == CombinerKind::lr ? "lr" : "rf";
}

CombinerKind combiner_from_name(const std::string& name) {
    if (name == "lr" || name == "LR") return CombinerKind::lr;
    if (name == "rf" || name == "RF") return CombinerKind::rf;
    throw Error("unknown combiner kind '" + name + "' (expected lr or rf)");
}

const std::vector<LearnerSpec>& StackingConfig::grid_for(Family family) const {
    const auto it = grids.find(family);
    if (it != grids.end() && !it->second.empty()) return it->second;
    static const std::map<Family, std::vector<LearnerSpec>> defaults = [] {
        std::map<Family, std::vector<LearnerSpec>> g;
        for (Family f : {Family::tree, Family::random_forest, Family::gbm,
                         Family::xgb, Family::linear_svc, Family::logreg})
            g[f] = default_grid(f);
        return g;
    }();
    return defaults.at(family);
}

MetaFeatures oof_meta_features(const std::vector<LearnerSpec>& specs,
                               const Dataset& ds, const FoldPlan& folds,
                               std::uint64_t seed,
                               const std::optional<SmoteParams>& smote,
                               int threads) {
    if (specs.empty()) throw Error("oof_meta_features: no specs");
    if (folds.assignment.size() != ds.n_rows())
        throw Error("oof_meta_features: fold plan does not match the dataset");

    MetaFeatures mf;
    mf.values = Matrix(ds.n_rows(), specs.size());
    mf.fold_plan_id = folds.id();
    for (const auto& s : specs) mf.spec_ids.push_back(s.spec_id());

    struct Task {
        int fold;
        std::size_t j;
    };
    std::vector<Task> tasks;
    for (int f = 0; f < folds.k; ++f)
        for (std::size_t j = 0; j < specs.size(); ++j) tasks.push_back({f, j});

    std::vector<std::vector<std::size_t>> fold_rows(folds.k);
    for (int f = 0; f < folds.k; ++f) fold_rows[f] = folds.fold_rows(f);

    parallel_for(tasks.size(), threads, [&](std::size_t ti) {
        const auto [f, j] = tasks[ti];
        const auto train_rows = folds.complement_rows(f);
        Dataset train = ds.subset_rows(train_rows);
        train = smote_if_configured(
            train, smote,
            derive_seed(seed, "oof_smote", specs[j].spec_id(),
                        static_cast<std::uint64_t>(f)));
        const FittedModel model =
            fit_learner(specs[j], train.values, train.labels,
                        derive_seed(seed, "oof", specs[j].spec_id(),
                                    static_cast<std::uint64_t>(f)));
        const auto eval = compact_rows(ds.values, fold_rows[f]);
        const auto s = predict_score(model, eval);
        for (std::size_t i = 0; i < fold_rows[f].size(); ++i)
            mf.values(fold_rows[f][i], j) = s[i];
    });
    return mf;
}

InternalStack fit_internal_stack(Family family, const Dataset& ds,
                                 const FoldPlan& folds, const StackingConfig& config,
                                 std::uint64_t seed, int threads) {
    return build_stack_parts(family, ds, folds, config, seed, threads).stack;
}

std::vector<double> predict_internal(const InternalStack& stack, const Matrix& X) {
    return predict_score(stack.combiner, member_score_matrix(stack.members, X));
}

TwoLevelModel fit_two_level(const Dataset& train, const StackingConfig& config,
                            const Preprocessing& preprocessing, std::uint64_t seed,
                            int threads) {
    check_families(config);
    const FoldPlan folds = make_folds(train, config.folds, derive_seed(seed, "folds"));

    TwoLevelModel model;
    model.meta_kind = config.meta;
    model.preprocessing = preprocessing;
    model.threshold = config.threshold;

    Matrix meta_inputs(train.n_rows(), config.families.size());
    for (std::size_t i = 0; i < config.families.size(); ++i) {
        const Family family = config.families[i];
        const std::uint64_t family_seed =
            derive_seed(seed, "family", family_name(family));
        log_info("stacking: fitting internal " + family_name(family) + " stack");
        StackParts parts =
            build_stack_parts(family, train, folds, config, family_seed, threads);
        const auto column =
            level2_oof_column(train, folds, parts, config, family_seed, threads);
        for (std::size_t r = 0; r < train.n_rows(); ++r) meta_inputs(r, i) = column[r];
        model.stacks.push_back(std::move(parts.stack));
    }

    log_info("stacking: fitting " + combiner_name(config.meta) + " meta-learner on " +
             std::to_string(meta_inputs.rows) + "x" +
             std::to_string(meta_inputs.cols) + " out-of-fold matrix");
    model.meta = fit_combiner(config.meta, meta_inputs, train.labels,
                              derive_seed(seed, "meta"), config, threads);
    return model;
}

std::vector<double> predict_two_level(const TwoLevelModel& model, const Dataset& raw) {
    const Matrix X = model.preprocessing.apply(raw);
    Matrix meta_inputs(X.rows, model.stacks.size());
    for (std::size_t i = 0; i < model.stacks.size(); ++i) {
        const auto column = predict_internal(model.stacks[i], X);
        for (std::size_t r = 0; r < X.rows; ++r) meta_inputs(r, i) = column[r];
    }
    return predict_score(model.meta, meta_inputs);
}

OneLevelModel fit_one_level(const Dataset& train, const StackingConfig& config,
                            const Preprocessing& preprocessing, std::uint64_t seed,
                            int threads) {
    check_families(config);
    const FoldPlan folds = make_folds(train, config.folds, derive_seed(seed, "folds"));

    // Pool the per-family winners into one flat member list.
    std::vector<LearnerSpec> pooled;
    for (Family family : config.families) {
        const std::uint64_t family_seed =
            derive_seed(seed, "family", family_name(family));
        const auto scores =
            grid_search(config.grid_for(family), train, folds,
                        derive_seed(family_seed, "grid"), config.smote, threads,
                        config.threshold);
        if (config.tuning_sink != nullptr)
            config.tuning_sink->insert(config.tuning_sink->end(), scores.begin(),
                                       scores.end());
        for (auto& spec : select_top_configs(scores, config.policy))
            pooled.push_back(std::move(spec));
    }

    const MetaFeatures mf = oof_meta_features(
        pooled, train, folds, derive_seed(seed, "pooled_oof"), config.smote, threads);

    OneLevelModel model;
    model.member_specs = pooled;
    model.meta_kind = config.meta;
    model.preprocessing = preprocessing;
    model.threshold = config.threshold;
    model.meta = fit_combiner(config.meta, mf.values, train.labels,
                              derive_seed(seed, "meta"), config, threads);

    const Dataset full = smote_if_configured(train, config.smote,
                                             derive_seed(seed, "full_smote"));
    model.members.resize(pooled.size());
    parallel_for(pooled.size(), threads, [&](std::size_t j) {
        model.members[j] =
            fit_learner(pooled[j], full.values, full.labels,
                        derive_seed(seed, "member_full", pooled[j].spec_id()));
    });
    return model;
}

std::vector<double> predict_one_level(const OneLevelModel& model, const Dataset& raw) {
    const Matrix X = model.preprocessing.apply(raw);
    return predict_score(model.meta, member_score_matrix(model.members, X));
}

}  // namespace stacktier
