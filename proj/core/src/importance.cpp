#include "stacktier/importance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "stacktier/common.hpp"
#include "stacktier/parallel.hpp"
#include "stacktier/rng.hpp"

namespace stacktier {

namespace {

double scored_metric(const TwoLevelModel& model, const Dataset& data,
                     const std::string& metric) {
    const auto scores = predict_two_level(model, data);
    return metric_value(full_report(scores, data.labels, model.threshold), metric);
}

// Permutes one feature column in place (values and mask move together so
// missing cells travel with their rows).
void permute_column(Dataset& ds, std::size_t feature, Rng& rng) {
    std::vector<std::size_t> order(ds.n_rows());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    std::vector<double> values(ds.n_rows());
    std::vector<std::uint8_t> mask(ds.n_rows());
    for (std::size_t r = 0; r < ds.n_rows(); ++r) {
        values[r] = ds.values(order[r], feature);
        mask[r] = ds.is_missing(order[r], feature) ? 1 : 0;
    }
    for (std::size_t r = 0; r < ds.n_rows(); ++r) {
        ds.values(r, feature) = values[r];
        ds.set_missing(r, feature, mask[r] != 0);
    }
}

}  // namespace

std::vector<std::string> ImportanceReport::ranked_features() const {
    std::vector<std::string> names;
    names.reserve(entries.size());
    for (const auto& e : entries) names.push_back(e.feature);
    return names;
}

ImportanceReport permutation_importance(const TwoLevelModel& model,
                                        const Dataset& eval,
                                        const std::string& metric, int repeats,
                                        std::uint64_t seed, int threads) {
    if (repeats < 1) throw Error("permutation_importance: repeats must be >= 1");
    const std::size_t d = eval.n_features();

    ImportanceReport report;
    report.metric = metric;
    report.baseline = scored_metric(model, eval, metric);

    struct Task {
        std::size_t feature;
        int repeat;
    };
    std::vector<Task> tasks;
    for (std::size_t f = 0; f < d; ++f)
        for (int t = 0; t < repeats; ++t) tasks.push_back({f, t});

    Matrix drops(d, static_cast<std::size_t>(repeats));
    parallel_for(tasks.size(), threads, [&](std::size_t ti) {
        const auto [f, t] = tasks[ti];
        Rng rng(derive_seed(seed, "perm", static_cast<std::uint64_t>(f),
                            static_cast<std::uint64_t>(t)));
        Dataset shuffled = eval;
        permute_column(shuffled, f, rng);
        drops(f, static_cast<std::size_t>(t)) =
            report.baseline - scored_metric(model, shuffled, metric);
    });

    report.entries.resize(d);
    for (std::size_t f = 0; f < d; ++f) {
        auto& e = report.entries[f];
        e.feature = eval.feature_names[f];
        double sum = 0.0;
        for (int t = 0; t < repeats; ++t) sum += drops(f, static_cast<std::size_t>(t));
        e.mean_drop = sum / repeats;
        double ss = 0.0;
        for (int t = 0; t < repeats; ++t) {
            const double dd = drops(f, static_cast<std::size_t>(t)) - e.mean_drop;
            ss += dd * dd;
        }
        e.std_drop = std::sqrt(ss / repeats);
    }

    // Rank by mean drop descending, ties by original column order.
    std::stable_sort(report.entries.begin(), report.entries.end(),
                     [](const FeatureImportance& a, const FeatureImportance& b) {
                         return a.mean_drop > b.mean_drop;
                     });
    for (std::size_t i = 0; i < report.entries.size(); ++i)
        report.entries[i].rank = static_cast<int>(i) + 1;
    return report;
}

std::string importance_csv(const ImportanceReport& report) {
    std::string out = "Rank,Feature,Mean Drop,Std Dev\n";
    for (const auto& e : report.entries) {
        out += std::to_string(e.rank) + "," + e.feature + "," +
               format_fixed(e.mean_drop, 6) + "," + format_fixed(e.std_drop, 6) + "\n";
    }
    return out;
}

std::string importance_text(const ImportanceReport& report) {
    std::string out = "Permutation importance (metric: " + report.metric +
                      ", baseline " + format_fixed(report.baseline, 4) + ")\n";
    for (const auto& e : report.entries) {
        out += "  " + std::to_string(e.rank) + ". " + e.feature + "  drop " +
               format_fixed(e.mean_drop, 6) + " +/- " + format_fixed(e.std_drop, 6) +
               "\n";
    }
    return out;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
    std::string out = "Feature Count," + report_csv_header() + "\n";
    for (const auto& row : rows)
        out += std::to_string(row.feature_count) + "," + report_csv_row(row.report) +
               "\n";
    return out;
}

std::string ablation_text(const std::vector<AblationRow>& rows) {
    std::string out;
    for (const auto& row : rows) {
        out += std::to_string(row.feature_count) + " features:\n";
        out += report_text(row.report);
    }
    return out;
}

}  // namespace stacktier
