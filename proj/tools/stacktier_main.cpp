// stacktier: two-level stacking ensemble pipeline for tabular binary
// classification. Subcommands: train, evaluate, importance, ablate,
// benchgen. Verbosity via STACKTIER_LOG (error|warn|info|debug).

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stacktier/common.hpp"
#include "stacktier/pipeline.hpp"

namespace {

using namespace stacktier;

struct SharedFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<int> threads;
    std::optional<std::string> data_path;
    bool compat_presplit_smote = false;
};

PipelineConfig load_config(const SharedFlags& flags) {
    PipelineConfig cfg = parse_config(flags.config_path);
    if (flags.seed) cfg.seed = *flags.seed;
    if (flags.out_dir) cfg.out_dir = *flags.out_dir;
    if (flags.threads) cfg.threads = *flags.threads;
    if (flags.data_path) cfg.data_path = *flags.data_path;
    if (flags.compat_presplit_smote) cfg.compat_presplit_smote = true;
    return cfg;
}

void add_shared(CLI::App* cmd, SharedFlags& flags) {
    cmd->add_option("--config", flags.config_path, "Pipeline config file (JSON)")
        ->required();
    cmd->add_option("--seed", flags.seed, "Override the config master seed");
    cmd->add_option("--out", flags.out_dir, "Override the output directory");
    cmd->add_option("--threads", flags.threads, "Worker thread count");
    cmd->add_option("--data", flags.data_path, "Override the data CSV path");
    cmd->add_flag("--compat-presplit-smote", flags.compat_presplit_smote,
                  "Balance classes before the train/test split");
}

}  // namespace

int main(int argc, char** argv) {
    if (std::getenv("STACKTIER_LOG") == nullptr) set_log_level(LogLevel::info);

    CLI::App app{"two-level stacking ensemble for tabular binary classification"};
    app.require_subcommand(1);

    SharedFlags train_flags;
    auto* train = app.add_subcommand("train", "Train a model end to end");
    add_shared(train, train_flags);

    std::string eval_model, eval_data, eval_out;
    auto* evaluate = app.add_subcommand("evaluate", "Score a data file with a model");
    evaluate->add_option("--model", eval_model, "Model container path")->required();
    evaluate->add_option("--data", eval_data, "Data CSV path")->required();
    evaluate->add_option("--out", eval_out, "Directory for the report files");

    std::string imp_model, imp_data, imp_out, imp_metric = "roc_auc";
    int imp_repeats = 10;
    std::uint64_t imp_seed = 42;
    int imp_threads = 1;
    auto* importance =
        app.add_subcommand("importance", "Permutation feature importance");
    importance->add_option("--model", imp_model, "Model container path")->required();
    importance->add_option("--data", imp_data, "Evaluation CSV path")->required();
    importance->add_option("--metric", imp_metric,
                           "accuracy|f1|recall|precision|roc_auc|auprc");
    importance->add_option("--repeats", imp_repeats, "Shuffles per feature");
    importance->add_option("--seed", imp_seed, "Shuffle seed");
    importance->add_option("--threads", imp_threads, "Worker thread count");
    importance->add_option("--out", imp_out, "Directory for the report files");

    SharedFlags ablate_flags;
    std::vector<int> ablate_counts;
    bool mask_only = false;
    int ablate_repeats = 10;
    auto* ablate = app.add_subcommand("ablate", "Top-k feature ablation study");
    add_shared(ablate, ablate_flags);
    ablate->add_option("--counts", ablate_counts, "Feature counts, e.g. 5,6,7,25")
        ->required()
        ->delimiter(',');
    ablate->add_flag("--mask-only", mask_only,
                     "Mask features instead of retraining (cheap preview)");
    ablate->add_option("--importance-repeats", ablate_repeats,
                       "Shuffles per feature for the ranking");

    SyntheticSpec bench_spec;
    std::string bench_out = "synthetic.csv";
    auto* benchgen = app.add_subcommand("benchgen", "Generate a synthetic benchmark CSV");
    benchgen->add_option("--rows", bench_spec.n_rows, "Row count");
    benchgen->add_option("--features", bench_spec.n_features, "Feature count");
    benchgen->add_option("--informative", bench_spec.n_informative,
                         "Informative feature count");
    benchgen->add_option("--positive-fraction", bench_spec.positive_fraction,
                         "Positive class fraction");
    benchgen->add_option("--separation", bench_spec.class_separation,
                         "Class mean gap on informative features");
    benchgen->add_option("--seed", bench_spec.seed, "Generator seed");
    benchgen->add_option("--out", bench_out, "Output CSV path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) {
            const auto result = train_command(load_config(train_flags));
            std::cout << report_csv_header() << "\n"
                      << report_csv_row(result.test_report) << "\n";
        } else if (evaluate->parsed()) {
            const auto report = evaluate_command(eval_model, eval_data, eval_out);
            std::cout << report_csv_header() << "\n" << report_csv_row(report) << "\n";
        } else if (importance->parsed()) {
            const auto report = importance_command(imp_model, imp_data, imp_metric,
                                                   imp_repeats, imp_seed, imp_threads,
                                                   imp_out);
            std::cout << importance_text(report);
        } else if (ablate->parsed()) {
            AblateOptions options;
            options.counts = ablate_counts;
            options.mask_only = mask_only;
            options.importance_repeats = ablate_repeats;
            const auto rows = ablate_command(load_config(ablate_flags), options);
            std::cout << ablation_csv(rows);
        } else if (benchgen->parsed()) {
            const auto path = benchgen_command(bench_spec, bench_out);
            std::cout << path << "\n";
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
