#include "stacktier/tuning.hpp"

#include <algorithm>
#include <set>

#include "stacktier/common.hpp"
#include "stacktier/metrics.hpp"
#include "stacktier/parallel.hpp"
#include "stacktier/rng.hpp"

namespace stacktier {

namespace {

const std::vector<std::string> kSelectionMetrics = {"accuracy", "precision",
                                                    "recall", "roc_auc"};

std::vector<LearnerSpec> cartesian_grid(
    Family family, const std::map<std::string, std::vector<double>>& axes) {
    std::vector<LearnerSpec> specs;
    specs.push_back(LearnerSpec{family, {}});
    for (const auto& [name, values] : axes) {
        std::vector<LearnerSpec> expanded;
        expanded.reserve(specs.size() * values.size());
        for (const auto& base : specs) {
            for (double v : values) {
                LearnerSpec s = base;
                s.params[name] = v;
                expanded.push_back(std::move(s));
            }
        }
        specs = std::move(expanded);
    }
    return specs;
}

}  // namespace

ConfigScore cv_score(const LearnerSpec& spec, const Dataset& ds,
                     const FoldPlan& folds, std::uint64_t seed,
                     const std::optional<SmoteParams>& smote, double threshold) {
    if (folds.assignment.size() != ds.n_rows())
        throw Error("cv_score: fold plan does not match the dataset");

    ConfigScore score;
    score.spec = spec;
    for (const auto& name : kSelectionMetrics)
        score.cv_fold_values[name] = {};

    const std::string id = spec.spec_id();
    for (int f = 0; f < folds.k; ++f) {
        const auto train_rows = folds.complement_rows(f);
        const auto eval_rows = folds.fold_rows(f);
        Dataset train = ds.subset_rows(train_rows);
        if (smote && smote_needed(train, *smote)) {
            SmoteParams p = *smote;
            p.seed = derive_seed(seed, "cv_smote", id, static_cast<std::uint64_t>(f));
            train = smote_oversample(train, p);
        }
        const Dataset eval = ds.subset_rows(eval_rows);
        const std::size_t eval_pos = eval.positive_count();
        if (eval_pos == 0 || eval_pos == eval.n_rows()) {
            // single-class evaluation fold: rank metrics are undefined
            score.valid = false;
            log_warn("cv_score: single-class fold " + std::to_string(f) +
                     ", marking config " + id + " invalid");
            continue;
        }
        const FittedModel model =
            fit_learner(spec, train.values, train.labels,
                        derive_seed(seed, "cv", id, static_cast<std::uint64_t>(f)));
        const auto scores = predict_score(model, eval.values);
        const auto t =
            threshold_metrics(confusion_at_threshold(scores, eval.labels, threshold));
        score.cv_fold_values["accuracy"].push_back(t.accuracy);
        score.cv_fold_values["precision"].push_back(t.precision);
        score.cv_fold_values["recall"].push_back(t.recall);
        score.cv_fold_values["roc_auc"].push_back(roc_auc(scores, eval.labels));
    }

    for (const auto& name : kSelectionMetrics) {
        const auto& vals = score.cv_fold_values[name];
        double sum = 0.0;
        for (double v : vals) sum += v;
        score.cv_mean[name] = vals.empty() ? 0.0 : sum / static_cast<double>(vals.size());
    }
    return score;
}

std::vector<ConfigScore> grid_search(const std::vector<LearnerSpec>& grid,
                                     const Dataset& ds, const FoldPlan& folds,
                                     std::uint64_t seed,
                                     const std::optional<SmoteParams>& smote,
                                     int threads, double threshold) {
    if (grid.empty()) throw Error("grid_search: empty grid");

    // Deduplicate and canonicalize the order before scoring so the
    // output is invariant under input permutation.
    std::vector<LearnerSpec> specs = grid;
    std::sort(specs.begin(), specs.end(),
              [](const LearnerSpec& a, const LearnerSpec& b) {
                  return a.spec_id() < b.spec_id();
              });
    specs.erase(std::unique(specs.begin(), specs.end()), specs.end());

    std::vector<ConfigScore> results(specs.size());
    parallel_for(specs.size(), threads, [&](std::size_t i) {
        results[i] = cv_score(specs[i], ds, folds, seed, smote, threshold);
    });

    if (std::none_of(results.begin(), results.end(),
                     [](const ConfigScore& s) { return s.valid; }))
        throw Error("grid_search: every configuration is invalid");
    return results;
}

std::vector<LearnerSpec> select_top_configs(const std::vector<ConfigScore>& scores,
                                            const SelectionPolicy& policy) {
    if (policy.metrics.empty())
        throw Error("select_top_configs: empty metric list");
    if (policy.per_metric_top < 1)
        throw Error("select_top_configs: per_metric_top must be >= 1");
    for (const auto& m : policy.metrics)
        if (std::find(kSelectionMetrics.begin(), kSelectionMetrics.end(), m) ==
            kSelectionMetrics.end())
            throw Error("select_top_configs: unknown selection metric '" + m + "'");

    std::vector<const ConfigScore*> valid;
    for (const auto& s : scores)
        if (s.valid) valid.push_back(&s);
    if (valid.empty()) throw Error("select_top_configs: no valid configurations");

    std::vector<LearnerSpec> selected;
    std::set<std::string> seen;
    for (const auto& metric : policy.metrics) {
        std::vector<const ConfigScore*> ranked = valid;
        std::stable_sort(ranked.begin(), ranked.end(),
                         [&](const ConfigScore* a, const ConfigScore* b) {
                             const double ma = a->cv_mean.at(metric);
                             const double mb = b->cv_mean.at(metric);
                             if (ma != mb) return ma > mb;
                             return a->spec.spec_id() < b->spec.spec_id();
                         });
        const auto take = std::min<std::size_t>(
            static_cast<std::size_t>(policy.per_metric_top), ranked.size());
        for (std::size_t i = 0; i < take; ++i) {
            const std::string id = ranked[i]->spec.spec_id();
            if (seen.insert(id).second) selected.push_back(ranked[i]->spec);
        }
    }
    return selected;
}

std::vector<LearnerSpec> default_grid(Family family) {
    switch (family) {
        case Family::tree:
            return cartesian_grid(family, {{"max_depth", {3, 5, 8, 0}}});
        case Family::random_forest:
            return cartesian_grid(family, {{"n_trees", {100, 300}}});
        case Family::gbm:
            return cartesian_grid(family, {{"n_rounds", {100, 300}},
                                           {"learning_rate", {0.05, 0.1, 0.3}},
                                           {"max_depth", {2, 3}}});
        case Family::xgb:
            return cartesian_grid(family, {{"n_rounds", {100, 300}},
                                           {"learning_rate", {0.05, 0.1, 0.3}},
                                           {"max_depth", {2, 3}},
                                           {"lambda", {1.0, 10.0}},
                                           {"gamma", {0.0, 1.0}}});
        case Family::linear_svc:
            return cartesian_grid(family, {{"C", {0.1, 1.0, 10.0}}});
        case Family::logreg:
            return cartesian_grid(family, {{"l2", {0.01, 1.0}}});
    }
    throw Error("unknown learner family");
}

std::string config_scores_csv(const std::vector<ConfigScore>& scores) {
    std::string out = "spec_id,valid,accuracy,precision,recall,roc_auc\n";
    for (const auto& s : scores) {
        out += s.spec.spec_id();
        out += s.valid ? ",1" : ",0";
        for (const auto& m : kSelectionMetrics)
            out += "," + format_fixed(s.cv_mean.at(m), 6);
        out += "\n";
    }
    return out;
}

}  // namespace stacktier
