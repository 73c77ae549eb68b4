#include "stacktier/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "stacktier/common.hpp"
#include "stacktier/rng.hpp"

namespace stacktier {

namespace {

using nlohmann::json;

std::size_t edit_distance(const std::string& a, const std::string& b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t sub = prev[j - 1] + (a[i - 1] != b[j - 1]);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

std::string nearest_key(const std::string& key,
                        const std::vector<std::string>& known) {
    std::string best;
    std::size_t best_dist = key.size() + 8;
    for (const auto& k : known) {
        const std::size_t d = edit_distance(key, k);
        if (d < best_dist) {
            best_dist = d;
            best = k;
        }
    }
    return best;
}

void reject_unknown_keys(const json& obj, const std::vector<std::string>& known,
                         const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw Error("config: unknown key '" + key + "'" +
                        (where.empty() ? "" : " in " + where) +
                        " (did you mean '" + nearest_key(key, known) + "'?)");
    }
}

std::map<Family, std::vector<LearnerSpec>> parse_grids(const json& obj,
                                                       double svc_calibration) {
    std::map<Family, std::vector<LearnerSpec>> grids;
    for (const auto& [family_key, axes] : obj.items()) {
        const Family family = family_from_name(family_key);
        if (!axes.is_object())
            throw Error("config: grids." + family_key + " must be an object of axes");
        std::vector<LearnerSpec> specs;
        specs.push_back(LearnerSpec{family, {}});
        for (const auto& [param, values] : axes.items()) {
            if (!values.is_array() || values.empty())
                throw Error("config: grids." + family_key + "." + param +
                            " must be a non-empty array");
            std::vector<LearnerSpec> expanded;
            for (const auto& base : specs) {
                for (const auto& v : values) {
                    if (!v.is_number())
                        throw Error("config: grids." + family_key + "." + param +
                                    " values must be numbers");
                    LearnerSpec s = base;
                    s.params[param] = v.get<double>();
                    expanded.push_back(std::move(s));
                }
            }
            specs = std::move(expanded);
        }
        if (family == Family::linear_svc) {
            for (auto& s : specs)
                if (!s.params.count("calibration_scale"))
                    s.params["calibration_scale"] = svc_calibration;
        }
        grids[family] = std::move(specs);
    }
    return grids;
}

void validate(const PipelineConfig& cfg) {
    if (!(cfg.max_missing_fraction >= 0.0 && cfg.max_missing_fraction < 1.0))
        throw Error("config: max_missing_fraction must be in [0, 1)");
    if (!(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0))
        throw Error("config: test_fraction must be in (0, 1)");
    if (cfg.folds < 2) throw Error("config: folds must be >= 2");
    if (cfg.smote.k_neighbors < 1) throw Error("config: smote.k_neighbors must be >= 1");
    if (!(cfg.smote.target_ratio > 0.0 && cfg.smote.target_ratio <= 1.0))
        throw Error("config: smote.target_ratio must be in (0, 1]");
    if (cfg.threads < 1) throw Error("config: threads must be >= 1");
    if (!(cfg.threshold >= 0.0 && cfg.threshold <= 1.0))
        throw Error("config: threshold must be in [0, 1]");
    if (cfg.architecture != "two_level" && cfg.architecture != "one_level")
        throw Error("config: architecture must be two_level or one_level");
    if (cfg.families.empty()) throw Error("config: families must be non-empty");
    if (cfg.policy.per_metric_top < 1)
        throw Error("config: selection.per_metric_top must be >= 1");
    if (cfg.combiner_l2 < 0.0) throw Error("config: combiner_l2 must be >= 0");
    if (cfg.combiner_forest_trees < 1)
        throw Error("config: meta_forest_trees must be >= 1");
}

}  // namespace

StackingConfig PipelineConfig::stacking() const {
    StackingConfig s;
    s.families = families;
    s.grids = grids;
    s.policy = policy;
    s.combiner = combiner;
    s.meta = meta;
    s.folds = folds;
    if (smote_enabled) {
        SmoteParams p = smote;
        p.seed = derive_seed(seed, "stacking_smote");
        s.smote = p;
    }
    s.threshold = threshold;
    s.combiner_l2 = combiner_l2;
    s.combiner_forest_trees = combiner_forest_trees;
    return s;
}

std::string PipelineConfig::canonical_json() const {
    json j;
    j["data"] = data_path;
    j["label_column"] = label_column;
    j["missing_tokens"] = missing_tokens;
    j["max_missing_fraction"] = max_missing_fraction;
    j["test_fraction"] = test_fraction;
    j["smote"] = {{"enabled", smote_enabled},
                  {"k_neighbors", smote.k_neighbors},
                  {"target_ratio", smote.target_ratio}};
    j["folds"] = folds;
    json fams = json::array();
    for (Family f : families) fams.push_back(family_name(f));
    j["families"] = fams;
    json grid_obj = json::object();
    for (const auto& [family, specs] : grids) {
        json arr = json::array();
        for (const auto& s : specs) arr.push_back(s.spec_id());
        grid_obj[family_name(family)] = arr;
    }
    j["grids"] = grid_obj;
    j["selection"] = {{"metrics", policy.metrics},
                      {"per_metric_top", policy.per_metric_top}};
    j["combiner"] = combiner_name(combiner);
    j["meta"] = combiner_name(meta);
    j["architecture"] = architecture;
    j["seed"] = seed;
    j["threshold"] = threshold;
    j["compat_presplit_smote"] = compat_presplit_smote;
    j["combiner_l2"] = combiner_l2;
    j["meta_forest_trees"] = combiner_forest_trees;
    j["svc_calibration_scale"] = svc_calibration_scale;
    return j.dump();
}

std::uint64_t PipelineConfig::fingerprint() const { return fnv1a(canonical_json()); }

PipelineConfig parse_config_text(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw Error(std::string("config: invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw Error("config: top level must be an object");

    static const std::vector<std::string> known = {
        "data",        "label_column",  "missing_tokens", "max_missing_fraction",
        "test_fraction", "smote",       "folds",          "families",
        "grids",       "selection",     "combiner",       "meta",
        "architecture", "seed",         "out_dir",        "threshold",
        "compat_presplit_smote", "threads", "combiner_l2", "meta_forest_trees",
        "svc_calibration_scale"};
    reject_unknown_keys(j, known, "");

    PipelineConfig cfg;
    if (j.count("data")) cfg.data_path = j["data"].get<std::string>();
    if (j.count("label_column")) cfg.label_column = j["label_column"].get<std::string>();
    if (j.count("missing_tokens"))
        cfg.missing_tokens = j["missing_tokens"].get<std::vector<std::string>>();
    if (j.count("max_missing_fraction"))
        cfg.max_missing_fraction = j["max_missing_fraction"].get<double>();
    if (j.count("test_fraction")) cfg.test_fraction = j["test_fraction"].get<double>();
    if (j.count("smote")) {
        const auto& s = j["smote"];
        reject_unknown_keys(s, {"enabled", "k_neighbors", "target_ratio"}, "smote");
        if (s.count("enabled")) cfg.smote_enabled = s["enabled"].get<bool>();
        if (s.count("k_neighbors")) cfg.smote.k_neighbors = s["k_neighbors"].get<int>();
        if (s.count("target_ratio"))
            cfg.smote.target_ratio = s["target_ratio"].get<double>();
    }
    if (j.count("folds")) cfg.folds = j["folds"].get<int>();
    if (j.count("families")) {
        cfg.families.clear();
        for (const auto& f : j["families"])
            cfg.families.push_back(family_from_name(f.get<std::string>()));
    }
    if (j.count("svc_calibration_scale"))
        cfg.svc_calibration_scale = j["svc_calibration_scale"].get<double>();
    if (j.count("grids")) cfg.grids = parse_grids(j["grids"], cfg.svc_calibration_scale);
    if (j.count("selection")) {
        const auto& s = j["selection"];
        reject_unknown_keys(s, {"metrics", "per_metric_top"}, "selection");
        if (s.count("metrics"))
            cfg.policy.metrics = s["metrics"].get<std::vector<std::string>>();
        if (s.count("per_metric_top"))
            cfg.policy.per_metric_top = s["per_metric_top"].get<int>();
    }
    if (j.count("combiner"))
        cfg.combiner = combiner_from_name(j["combiner"].get<std::string>());
    if (j.count("meta")) cfg.meta = combiner_from_name(j["meta"].get<std::string>());
    if (j.count("architecture")) cfg.architecture = j["architecture"].get<std::string>();
    if (j.count("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.count("out_dir")) cfg.out_dir = j["out_dir"].get<std::string>();
    if (j.count("threshold")) cfg.threshold = j["threshold"].get<double>();
    if (j.count("compat_presplit_smote"))
        cfg.compat_presplit_smote = j["compat_presplit_smote"].get<bool>();
    if (j.count("threads")) cfg.threads = j["threads"].get<int>();
    if (j.count("combiner_l2")) cfg.combiner_l2 = j["combiner_l2"].get<double>();
    if (j.count("meta_forest_trees"))
        cfg.combiner_forest_trees = j["meta_forest_trees"].get<int>();

    validate(cfg);
    return cfg;
}

PipelineConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("config: cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

}  // namespace stacktier
