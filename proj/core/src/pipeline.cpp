#include "stacktier/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <set>

#include "stacktier/common.hpp"
#include "stacktier/rng.hpp"

namespace stacktier {

namespace {

namespace fs = std::filesystem;

template <typename Fn>
auto run_stage(const std::string& stage, Fn&& fn) {
    try {
        return fn();
    } catch (const Error& e) {
        throw Error("[stage:" + stage + "] " + e.what());
    }
}

std::vector<std::size_t> kept_indices(const Dataset& raw,
                                      const std::vector<std::string>& kept_names) {
    const std::set<std::string> wanted(kept_names.begin(), kept_names.end());
    if (wanted.size() != kept_names.size())
        throw Error("pipeline: duplicate names in the kept-feature list");
    std::vector<std::size_t> idx;
    for (std::size_t c = 0; c < raw.feature_names.size(); ++c)
        if (wanted.count(raw.feature_names[c])) idx.push_back(c);
    if (idx.size() != kept_names.size()) {
        for (const auto& name : kept_names)
            if (std::find(raw.feature_names.begin(), raw.feature_names.end(), name) ==
                raw.feature_names.end())
                throw Error("pipeline: kept feature '" + name + "' not in the data");
    }
    return idx;  // ascending: original column order is preserved
}

void ensure_out_dir(const std::string& dir) {
    if (dir.empty()) return;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error("pipeline: cannot create output directory '" + dir + "'");
}

std::string join_path(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

Dataset load_for_model(const ModelVariant& model, const std::string& data_path) {
    const Preprocessing& prep = model_preprocessing(model);
    return load_csv(data_path, prep.label_column, prep.missing_tokens);
}

std::string csv_text(const Dataset& ds, const std::string& label_column) {
    std::string out;
    for (const auto& name : ds.feature_names) out += name + ",";
    out += label_column + "\n";
    for (std::size_t r = 0; r < ds.n_rows(); ++r) {
        for (std::size_t c = 0; c < ds.n_features(); ++c) {
            if (!ds.is_missing(r, c)) out += format_double(ds.values(r, c));
            out += ",";
        }
        out += std::to_string(ds.labels[r]) + "\n";
    }
    return out;
}

}  // namespace

TrainOutput train_on_split(const Dataset& train_raw, const Dataset& test_raw,
                           const std::vector<std::string>& kept_feature_names,
                           const PipelineConfig& config, std::uint64_t seed,
                           int threads, std::vector<ConfigScore>* diagnostics) {
    const auto kept = kept_indices(train_raw, kept_feature_names);
    Dataset train = train_raw.subset_features(kept);

    const auto imputed = run_stage("impute", [&] { return impute_mean(train); });
    train = imputed.data;
    log_info("impute: fitted " + std::to_string(imputed.means.size()) +
             " training means");

    if (config.smote_enabled && !config.compat_presplit_smote &&
        smote_needed(train, config.smote)) {
        SmoteParams params = config.smote;
        params.seed = derive_seed(seed, "pipeline_smote");
        const std::size_t before = train.n_rows();
        train = run_stage("smote", [&] { return smote_oversample(train, params); });
        log_info("smote: " + std::to_string(before) + " -> " +
                 std::to_string(train.n_rows()) + " training rows");
    }

    const Standardizer standardizer =
        run_stage("standardize", [&] { return fit_standardizer(train); });
    train = apply_standardizer(standardizer, train);

    Preprocessing prep;
    prep.raw_feature_names = train_raw.feature_names;
    prep.label_column = config.label_column;
    prep.missing_tokens = config.missing_tokens;
    prep.kept_features = kept;
    prep.impute_means = imputed.means;
    prep.standardizer = standardizer;

    StackingConfig stacking = config.stacking();
    stacking.tuning_sink = diagnostics;
    // Training rows are balanced and standardized by now; the in-fold
    // SMOTE stays configured so fold complements re-balance themselves
    // if rounding left them short (a no-op otherwise).

    TrainOutput out;
    if (config.architecture == "one_level") {
        OneLevelModel model = run_stage("fit", [&] {
            return fit_one_level(train, stacking, prep, seed, threads);
        });
        model.config_fingerprint = config.fingerprint();
        out.model = std::move(model);
    } else {
        TwoLevelModel model = run_stage("fit", [&] {
            return fit_two_level(train, stacking, prep, seed, threads);
        });
        model.config_fingerprint = config.fingerprint();
        out.model = std::move(model);
    }

    out.test_report = run_stage("evaluate", [&] {
        const auto scores = predict_model(out.model, test_raw);
        return full_report(scores, test_raw.labels, config.threshold);
    });
    out.train_report = run_stage("evaluate", [&] {
        const auto scores = predict_model(out.model, train_raw);
        return full_report(scores, train_raw.labels, config.threshold);
    });
    return out;
}

TrainCommandResult train_command(const PipelineConfig& config) {
    if (config.data_path.empty()) throw Error("train: config has no data path");
    ensure_out_dir(config.out_dir);

    Dataset raw = run_stage("load", [&] {
        return load_csv(config.data_path, config.label_column, config.missing_tokens);
    });
    log_info("load: " + std::to_string(raw.n_rows()) + " rows, " +
             std::to_string(raw.n_features()) + " features");

    const Dataset filtered = run_stage("missingness_filter", [&] {
        return drop_high_missing(raw, config.max_missing_fraction);
    });
    log_info("missingness_filter: kept " + std::to_string(filtered.n_features()) +
             " of " + std::to_string(raw.n_features()) + " features (threshold " +
             format_fixed(config.max_missing_fraction, 2) + ")");

    Dataset split_source = filtered;
    if (config.compat_presplit_smote) {
        // Compatibility mode: balance before the split, as the source
        // protocol lists it. Synthetic rows can land in the test
        // partition; this leaks training information and is logged.
        log_warn(
            "compat-presplit-smote: applying SMOTE before the train/test split; "
            "synthetic rows may leak into the test partition");
        split_source = run_stage("impute", [&] { return impute_mean(filtered).data; });
        if (config.smote_enabled) {
            SmoteParams params = config.smote;
            params.seed = derive_seed(config.seed, "presplit_smote");
            split_source =
                run_stage("smote", [&] { return smote_oversample(split_source, params); });
        }
        raw = split_source;  // partitions carry the balanced filtered schema
    }

    const SplitResult split = run_stage("split", [&] {
        return stratified_split(split_source, config.test_fraction, config.seed);
    });
    // Partitions keep the full pre-drop schema; the keep-list is frozen
    // into the model.
    const Dataset train_raw = raw.subset_rows(split.train_rows);
    const Dataset test_raw = raw.subset_rows(split.test_rows);
    log_info("split: " + std::to_string(train_raw.n_rows()) + " train / " +
             std::to_string(test_raw.n_rows()) + " test rows (" +
             std::to_string(train_raw.positive_count()) + " / " +
             std::to_string(test_raw.positive_count()) + " positives)");

    std::vector<ConfigScore> diagnostics;
    const TrainOutput fit =
        train_on_split(train_raw, test_raw, filtered.feature_names, config,
                       config.seed, config.threads, &diagnostics);

    TrainCommandResult result;
    result.test_report = fit.test_report;
    result.train_report = fit.train_report;
    result.model_path = join_path(config.out_dir, "model.tlens");

    run_stage("persist", [&] {
        save_model(result.model_path, fit.model);
        write_file_atomic(join_path(config.out_dir, "report.csv"),
                          report_csv_header() + "\n" +
                              report_csv_row(fit.test_report) + "\n");
        write_file_atomic(join_path(config.out_dir, "report.txt"),
                          report_text(fit.test_report));
        write_file_atomic(join_path(config.out_dir, "train_report.csv"),
                          report_csv_header() + "\n" +
                              report_csv_row(fit.train_report) + "\n");
        write_file_atomic(join_path(config.out_dir, "config_scores.csv"),
                          config_scores_csv(diagnostics));
        write_file_atomic(join_path(config.out_dir, "train_split.csv"),
                          csv_text(train_raw, config.label_column));
        write_file_atomic(join_path(config.out_dir, "test_split.csv"),
                          csv_text(test_raw, config.label_column));
        return 0;
    });

    log_info("train: test report " + report_csv_row(fit.test_report));
    log_info("train: train report " + report_csv_row(fit.train_report));
    log_info("train: artifacts written to " + config.out_dir);
    return result;
}

MetricReport evaluate_command(const std::string& model_path,
                              const std::string& data_path,
                              const std::string& out_dir) {
    const ModelVariant model =
        run_stage("load_model", [&] { return load_model(model_path); });
    const Dataset data =
        run_stage("load_data", [&] { return load_for_model(model, data_path); });
    const auto scores = run_stage("score", [&] { return predict_model(model, data); });
    const MetricReport report =
        full_report(scores, data.labels, model_threshold(model));
    if (!out_dir.empty()) {
        ensure_out_dir(out_dir);
        write_file_atomic(join_path(out_dir, "evaluation.csv"),
                          report_csv_header() + "\n" + report_csv_row(report) + "\n");
        write_file_atomic(join_path(out_dir, "evaluation.txt"), report_text(report));
    }
    return report;
}

ImportanceReport importance_command(const std::string& model_path,
                                    const std::string& data_path,
                                    const std::string& metric, int repeats,
                                    std::uint64_t seed, int threads,
                                    const std::string& out_dir) {
    const ModelVariant model =
        run_stage("load_model", [&] { return load_model(model_path); });
    if (!std::holds_alternative<TwoLevelModel>(model))
        throw Error("importance: model is not a two-level ensemble");
    const Dataset data =
        run_stage("load_data", [&] { return load_for_model(model, data_path); });
    const auto report =
        permutation_importance(std::get<TwoLevelModel>(model), data, metric,
                               repeats, seed, threads);
    if (!out_dir.empty()) {
        ensure_out_dir(out_dir);
        write_file_atomic(join_path(out_dir, "importance.csv"), importance_csv(report));
        write_file_atomic(join_path(out_dir, "importance.txt"), importance_text(report));
    }
    return report;
}

std::vector<AblationRow> feature_ablation(const Dataset& train_raw,
                                          const Dataset& test_raw,
                                          const std::vector<std::string>& ranked_features,
                                          const std::vector<int>& counts,
                                          const PipelineConfig& config,
                                          std::uint64_t seed, int threads) {
    if (counts.empty()) throw Error("feature_ablation: empty count list");
    if (!std::is_sorted(counts.begin(), counts.end()))
        throw Error("feature_ablation: counts must be sorted ascending");
    for (int k : counts)
        if (k < 1 || static_cast<std::size_t>(k) > ranked_features.size())
            throw Error("feature_ablation: count " + std::to_string(k) +
                        " outside [1, " + std::to_string(ranked_features.size()) + "]");

    std::vector<AblationRow> rows;
    for (int k : counts) {
        const std::vector<std::string> kept(ranked_features.begin(),
                                            ranked_features.begin() + k);
        log_info("ablation: retraining with top " + std::to_string(k) + " features");
        const TrainOutput fit =
            train_on_split(train_raw, test_raw, kept, config, seed, threads);
        rows.push_back({k, fit.test_report});
    }
    return rows;
}

std::vector<AblationRow> ablate_command(const PipelineConfig& config,
                                        const AblateOptions& options) {
    if (config.data_path.empty()) throw Error("ablate: config has no data path");
    ensure_out_dir(config.out_dir);

    const Dataset raw = run_stage("load", [&] {
        return load_csv(config.data_path, config.label_column, config.missing_tokens);
    });
    const Dataset filtered = run_stage("missingness_filter", [&] {
        return drop_high_missing(raw, config.max_missing_fraction);
    });
    const SplitResult split = run_stage("split", [&] {
        return stratified_split(filtered, config.test_fraction, config.seed);
    });
    const Dataset train_raw = raw.subset_rows(split.train_rows);
    const Dataset test_raw = raw.subset_rows(split.test_rows);

    log_info("ablate: training the reference model");
    const TrainOutput reference =
        train_on_split(train_raw, test_raw, filtered.feature_names, config,
                       config.seed, config.threads);
    const auto& model = std::get<TwoLevelModel>(reference.model);

    const auto importance = permutation_importance(
        model, test_raw, "roc_auc", options.importance_repeats,
        derive_seed(config.seed, "ablate_importance"), config.threads);

    // Rank over the retained features only; dropped columns score a flat 0.
    std::vector<std::string> ranked;
    const std::set<std::string> kept_set(filtered.feature_names.begin(),
                                         filtered.feature_names.end());
    for (const auto& name : importance.ranked_features())
        if (kept_set.count(name)) ranked.push_back(name);

    std::vector<AblationRow> rows;
    if (options.mask_only) {
        // Preview mode: keep the reference model and mask the excluded
        // features so they fall back to their frozen training means.
        for (int k : options.counts) {
            if (k < 1 || static_cast<std::size_t>(k) > ranked.size())
                throw Error("ablate: count " + std::to_string(k) + " outside [1, " +
                            std::to_string(ranked.size()) + "]");
            const std::set<std::string> keep(ranked.begin(), ranked.begin() + k);
            Dataset masked = test_raw;
            for (std::size_t c = 0; c < masked.n_features(); ++c) {
                if (keep.count(masked.feature_names[c]) ||
                    !kept_set.count(masked.feature_names[c]))
                    continue;
                for (std::size_t r = 0; r < masked.n_rows(); ++r)
                    masked.set_missing(r, c, true);
            }
            const auto scores = predict_two_level(model, masked);
            rows.push_back(
                {k, full_report(scores, masked.labels, config.threshold)});
        }
    } else {
        rows = feature_ablation(train_raw, test_raw, ranked, options.counts, config,
                                config.seed, config.threads);
    }

    write_file_atomic(join_path(config.out_dir, "ablation.csv"), ablation_csv(rows));
    write_file_atomic(join_path(config.out_dir, "ablation.txt"), ablation_text(rows));
    write_file_atomic(join_path(config.out_dir, "importance.csv"),
                      importance_csv(importance));
    return rows;
}

std::string benchgen_command(const SyntheticSpec& spec, const std::string& out_path) {
    const Dataset ds = generate_synthetic(spec);
    write_file_atomic(out_path, csv_text(ds, "label"));
    log_info("benchgen: wrote " + std::to_string(ds.n_rows()) + " rows x " +
             std::to_string(ds.n_features() + 1) + " columns to " + out_path);
    return out_path;
}

}  // namespace stacktier
