#include "stacktier/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "stacktier/common.hpp"
#include "stacktier/rng.hpp"

namespace stacktier {

namespace {

long long round_half_up(double x) {
    return static_cast<long long>(std::floor(x + 0.5));
}

// Content key for order-independent splitting and folding: two rows with
// identical cells, mask, and label always hash alike, so shuffling the
// input rows permutes assignments without changing the content->partition
// multiset.
std::uint64_t row_key(const Dataset& ds, std::size_t r, std::uint64_t seed) {
    std::uint64_t h = derive_seed(seed, "row_key");
    for (std::size_t c = 0; c < ds.n_features(); ++c) {
        if (ds.is_missing(r, c)) {
            h = mix64(h ^ 0x6d697373696e6721ull);
        } else {
            h = mix64(h ^ fnv1a_u64(std::bit_cast<std::uint64_t>(ds.values(r, c))));
        }
    }
    return mix64(h ^ static_cast<std::uint64_t>(ds.labels[r]));
}

// Lexicographic row comparison (mask-aware), used only to break key ties
// deterministically; fully equal rows are interchangeable.
bool row_less(const Dataset& ds, std::size_t a, std::size_t b) {
    for (std::size_t c = 0; c < ds.n_features(); ++c) {
        const bool ma = ds.is_missing(a, c), mb = ds.is_missing(b, c);
        if (ma != mb) return mb;
        if (ma) continue;
        const double va = ds.values(a, c), vb = ds.values(b, c);
        if (va != vb) return va < vb;
    }
    return ds.labels[a] < ds.labels[b];
}

std::vector<std::size_t> class_rows(const Dataset& ds, int label) {
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < ds.n_rows(); ++r)
        if (ds.labels[r] == label) rows.push_back(r);
    return rows;
}

// Orders the rows of one class by (content key, content); the prefix of
// the result is a deterministic, permutation-consistent sample.
std::vector<std::size_t> keyed_order(const Dataset& ds,
                                     std::vector<std::size_t> rows,
                                     std::uint64_t seed) {
    std::vector<std::uint64_t> keys(ds.n_rows());
    for (std::size_t r : rows) keys[r] = row_key(ds, r, seed);
    std::stable_sort(rows.begin(), rows.end(),
                     [&](std::size_t a, std::size_t b) {
                         if (keys[a] != keys[b]) return keys[a] < keys[b];
                         return row_less(ds, a, b);
                     });
    return rows;
}

}  // namespace

bool Dataset::has_missing() const {
    return std::any_of(missing_mask.begin(), missing_mask.end(),
                       [](std::uint8_t m) { return m != 0; });
}

std::size_t Dataset::positive_count() const {
    return static_cast<std::size_t>(
        std::count(labels.begin(), labels.end(), 1));
}

Dataset Dataset::with_shape(std::vector<std::string> names, std::size_t rows) {
    Dataset ds;
    const std::size_t d = names.size();
    ds.feature_names = std::move(names);
    ds.values = Matrix(rows, d);
    ds.missing_mask.assign(rows * d, 0);
    ds.labels.assign(rows, 0);
    return ds;
}

Dataset Dataset::subset_rows(const std::vector<std::size_t>& idx) const {
    Dataset out;
    out.feature_names = feature_names;
    out.values = values.select_rows(idx);
    const std::size_t d = n_features();
    out.missing_mask.resize(idx.size() * d);
    out.labels.resize(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        std::memcpy(out.missing_mask.data() + i * d,
                    missing_mask.data() + idx[i] * d, d);
        out.labels[i] = labels[idx[i]];
    }
    return out;
}

Dataset Dataset::subset_features(const std::vector<std::size_t>& feature_idx) const {
    Dataset out;
    const std::size_t n = n_rows();
    out.feature_names.reserve(feature_idx.size());
    for (std::size_t c : feature_idx) out.feature_names.push_back(feature_names[c]);
    out.values = Matrix(n, feature_idx.size());
    out.missing_mask.assign(n * feature_idx.size(), 0);
    out.labels = labels;
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t j = 0; j < feature_idx.size(); ++j) {
            out.values(r, j) = values(r, feature_idx[j]);
            out.missing_mask[r * feature_idx.size() + j] =
                missing_mask[r * n_features() + feature_idx[j]];
        }
    }
    return out;
}

void Dataset::validate() const {
    if (values.rows != labels.size())
        throw Error("dataset: row/label count mismatch");
    if (values.cols != feature_names.size())
        throw Error("dataset: column/name count mismatch");
    if (missing_mask.size() != values.rows * values.cols)
        throw Error("dataset: mask shape mismatch");
    std::set<std::string> seen(feature_names.begin(), feature_names.end());
    if (seen.size() != feature_names.size())
        throw Error("dataset: duplicate feature names");
    for (int y : labels)
        if (y != 0 && y != 1) throw Error("dataset: non-binary label");
}

std::uint64_t FoldPlan::id() const {
    std::uint64_t h = fnv1a_u64(static_cast<std::uint64_t>(k));
    for (int a : assignment) h = fnv1a_u64(static_cast<std::uint64_t>(a), h);
    return h;
}

std::vector<std::size_t> FoldPlan::fold_rows(int fold) const {
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < assignment.size(); ++r)
        if (assignment[r] == fold) rows.push_back(r);
    return rows;
}

std::vector<std::size_t> FoldPlan::complement_rows(int fold) const {
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < assignment.size(); ++r)
        if (assignment[r] != fold) rows.push_back(r);
    return rows;
}

std::vector<std::size_t> FoldPlan::complement_rows(int fold_a, int fold_b) const {
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < assignment.size(); ++r)
        if (assignment[r] != fold_a && assignment[r] != fold_b) rows.push_back(r);
    return rows;
}

// -- CSV -----------------------------------------------------------------

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

bool parse_double(const std::string& s, double& out) {
    const char* begin = s.c_str();
    char* end = nullptr;
    out = std::strtod(begin, &end);
    return end != begin && *end == '\0' && std::isfinite(out);
}

}  // namespace

Dataset load_csv(const std::string& path, const std::string& label_column,
                 const std::vector<std::string>& missing_tokens) {
    std::ifstream in(path);
    if (!in) throw Error("load_csv: cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw Error("load_csv: empty file '" + path + "'");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split_line(line);

    std::ptrdiff_t label_idx = -1;
    std::vector<std::string> names;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == label_column) {
            if (label_idx >= 0)
                throw Error("load_csv: duplicate label column '" + label_column + "'");
            label_idx = static_cast<std::ptrdiff_t>(i);
        } else {
            names.push_back(header[i]);
        }
    }
    if (label_idx < 0)
        throw Error("load_csv: label column '" + label_column + "' not found");

    const auto is_missing_token = [&](const std::string& cell) {
        if (cell.empty()) return true;
        return std::find(missing_tokens.begin(), missing_tokens.end(), cell) !=
               missing_tokens.end();
    };

    std::vector<double> values;
    std::vector<std::uint8_t> mask;
    std::vector<int> labels;
    std::size_t row_no = 1;
    while (std::getline(in, line)) {
        ++row_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split_line(line);
        if (cells.size() != header.size())
            throw Error("load_csv: ragged row " + std::to_string(row_no) + " in '" +
                        path + "' (" + std::to_string(cells.size()) + " cells, expected " +
                        std::to_string(header.size()) + ")");
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (static_cast<std::ptrdiff_t>(i) == label_idx) {
                double y;
                if (!parse_double(cells[i], y) || (y != 0.0 && y != 1.0))
                    throw Error("load_csv: non-binary label '" + cells[i] + "' at row " +
                                std::to_string(row_no));
                labels.push_back(static_cast<int>(y));
            } else if (is_missing_token(cells[i])) {
                values.push_back(0.0);
                mask.push_back(1);
            } else {
                double v;
                if (!parse_double(cells[i], v))
                    throw Error("load_csv: unparseable value '" + cells[i] +
                                "' in column '" + header[i] + "' at row " +
                                std::to_string(row_no));
                values.push_back(v);
                mask.push_back(0);
            }
        }
    }

    Dataset ds;
    ds.feature_names = std::move(names);
    ds.values.rows = labels.size();
    ds.values.cols = ds.feature_names.size();
    ds.values.data = std::move(values);
    ds.missing_mask = std::move(mask);
    ds.labels = std::move(labels);
    ds.validate();
    return ds;
}

void write_csv(const Dataset& ds, const std::string& path,
               const std::string& label_column) {
    std::ofstream out(path);
    if (!out) throw Error("write_csv: cannot open '" + path + "' for writing");
    for (std::size_t c = 0; c < ds.n_features(); ++c) out << ds.feature_names[c] << ",";
    out << label_column << "\n";
    for (std::size_t r = 0; r < ds.n_rows(); ++r) {
        for (std::size_t c = 0; c < ds.n_features(); ++c) {
            if (!ds.is_missing(r, c)) out << format_double(ds.values(r, c));
            out << ",";
        }
        out << ds.labels[r] << "\n";
    }
    if (!out) throw Error("write_csv: write failed for '" + path + "'");
}

// -- preprocessing ---------------------------------------------------------

Dataset drop_high_missing(const Dataset& ds, double max_missing_fraction) {
    if (max_missing_fraction < 0.0 || max_missing_fraction >= 1.0)
        throw Error("drop_high_missing: threshold must be in [0, 1)");
    if (ds.n_rows() == 0) throw Error("drop_high_missing: empty dataset");
    std::vector<std::size_t> kept;
    for (std::size_t c = 0; c < ds.n_features(); ++c) {
        std::size_t missing = 0;
        for (std::size_t r = 0; r < ds.n_rows(); ++r) missing += ds.is_missing(r, c);
        const double fraction =
            static_cast<double>(missing) / static_cast<double>(ds.n_rows());
        if (fraction <= max_missing_fraction) kept.push_back(c);
    }
    if (kept.empty()) throw Error("drop_high_missing: all features dropped");
    return ds.subset_features(kept);
}

ImputeResult impute_mean(const Dataset& ds) {
    ImputeResult res;
    res.means.resize(ds.n_features());
    for (std::size_t c = 0; c < ds.n_features(); ++c) {
        double sum = 0.0;
        std::size_t observed = 0;
        for (std::size_t r = 0; r < ds.n_rows(); ++r) {
            if (!ds.is_missing(r, c)) {
                sum += ds.values(r, c);
                ++observed;
            }
        }
        if (observed == 0)
            throw Error("impute_mean: feature '" + ds.feature_names[c] +
                        "' has no observed values");
        res.means[c] = sum / static_cast<double>(observed);
    }
    res.data = apply_impute(ds, res.means);
    return res;
}

Dataset apply_impute(const Dataset& ds, const std::vector<double>& means) {
    if (means.size() != ds.n_features())
        throw Error("apply_impute: means length mismatch");
    Dataset out = ds;
    for (std::size_t r = 0; r < out.n_rows(); ++r)
        for (std::size_t c = 0; c < out.n_features(); ++c)
            if (out.is_missing(r, c)) {
                out.values(r, c) = means[c];
                out.set_missing(r, c, false);
            }
    return out;
}

Standardizer fit_standardizer(const Dataset& ds) {
    if (ds.n_rows() == 0) throw Error("fit_standardizer: empty dataset");
    if (ds.has_missing())
        throw Error("fit_standardizer: dataset still has missing values");
    const std::size_t n = ds.n_rows();
    Standardizer s;
    s.mean.resize(ds.n_features());
    s.scale.resize(ds.n_features());
    s.constant_flag.resize(ds.n_features());
    for (std::size_t c = 0; c < ds.n_features(); ++c) {
        double lo = ds.values(0, c), hi = ds.values(0, c), sum = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            const double v = ds.values(r, c);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
            sum += v;
        }
        const double mean = sum / static_cast<double>(n);
        s.mean[c] = mean;
        if (lo == hi) {
            s.constant_flag[c] = 1;
            s.scale[c] = 1.0;
            continue;
        }
        s.constant_flag[c] = 0;
        double ss = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            const double d = ds.values(r, c) - mean;
            ss += d * d;
        }
        s.scale[c] = std::sqrt(ss / static_cast<double>(n));  // population std
    }
    return s;
}

Dataset apply_standardizer(const Standardizer& s, const Dataset& ds) {
    if (s.mean.size() != ds.n_features())
        throw Error("apply_standardizer: feature count mismatch");
    if (ds.has_missing())
        throw Error("apply_standardizer: dataset still has missing values");
    Dataset out = ds;
    for (std::size_t c = 0; c < ds.n_features(); ++c) {
        for (std::size_t r = 0; r < ds.n_rows(); ++r) {
            out.values(r, c) = s.constant_flag[c]
                                   ? 0.0
                                   : (ds.values(r, c) - s.mean[c]) / s.scale[c];
        }
    }
    return out;
}

SplitResult stratified_split(const Dataset& ds, double test_fraction,
                             std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw Error("stratified_split: test_fraction must be in (0, 1)");
    const auto pos = class_rows(ds, 1);
    const auto neg = class_rows(ds, 0);
    if (pos.empty() || neg.empty())
        throw Error("stratified_split: both classes must be present");
    if (pos.size() < 2 || neg.size() < 2)
        throw Error("stratified_split: a class has fewer than 2 rows");

    std::vector<std::uint8_t> in_test(ds.n_rows(), 0);
    for (const auto& rows : {pos, neg}) {
        const auto ordered = keyed_order(ds, rows, seed);
        const auto n_test = static_cast<std::size_t>(round_half_up(
            static_cast<double>(rows.size()) * test_fraction));
        for (std::size_t i = 0; i < n_test && i < ordered.size(); ++i)
            in_test[ordered[i]] = 1;
    }

    SplitResult res;
    for (std::size_t r = 0; r < ds.n_rows(); ++r)
        (in_test[r] ? res.test_rows : res.train_rows).push_back(r);
    res.train = ds.subset_rows(res.train_rows);
    res.test = ds.subset_rows(res.test_rows);
    return res;
}

FoldPlan make_folds(const Dataset& ds, int k, std::uint64_t seed) {
    if (k < 2) throw Error("make_folds: k must be at least 2");
    const auto pos = class_rows(ds, 1);
    const auto neg = class_rows(ds, 0);
    const std::size_t minority = std::min(pos.size(), neg.size());
    if (minority < static_cast<std::size_t>(k))
        throw Error("make_folds: k=" + std::to_string(k) +
                    " exceeds minority-class count " + std::to_string(minority));

    FoldPlan plan;
    plan.k = k;
    plan.assignment.assign(ds.n_rows(), 0);
    for (const auto& rows : {pos, neg}) {
        const auto ordered = keyed_order(ds, rows, derive_seed(seed, "folds"));
        for (std::size_t i = 0; i < ordered.size(); ++i)
            plan.assignment[ordered[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
    }
    return plan;
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
    if (spec.n_informative > spec.n_features)
        throw Error("generate_synthetic: n_informative exceeds n_features");
    if (!(spec.positive_fraction > 0.0 && spec.positive_fraction < 1.0))
        throw Error("generate_synthetic: positive_fraction must be in (0, 1)");
    if (spec.class_separation < 0.0)
        throw Error("generate_synthetic: class_separation must be >= 0");

    std::vector<std::string> names;
    names.reserve(spec.n_features);
    for (std::size_t i = 1; i <= spec.n_features; ++i)
        names.push_back("f" + std::to_string(i));

    Dataset ds = Dataset::with_shape(std::move(names), spec.n_rows);
    const auto n_pos = static_cast<std::size_t>(round_half_up(
        static_cast<double>(spec.n_rows) * spec.positive_fraction));

    Rng rng(derive_seed(spec.seed, "synthetic"));
    for (std::size_t r = 0; r < spec.n_rows; ++r) {
        const int label = r < n_pos ? 1 : 0;
        ds.labels[r] = label;
        for (std::size_t c = 0; c < spec.n_features; ++c) {
            double v = rng.next_normal();
            if (label == 1 && c < spec.n_informative) v += spec.class_separation;
            ds.values(r, c) = v;
        }
    }
    return ds;
}

// -- frozen preprocessing ----------------------------------------------------

Preprocessing Preprocessing::identity(const std::vector<std::string>& names) {
    Preprocessing p;
    p.raw_feature_names = names;
    p.label_column = "label";
    p.missing_tokens = {"", "NA", "NaN"};
    p.kept_features.resize(names.size());
    std::iota(p.kept_features.begin(), p.kept_features.end(), 0);
    p.impute_means.assign(names.size(), 0.0);
    p.standardizer.mean.assign(names.size(), 0.0);
    p.standardizer.scale.assign(names.size(), 1.0);
    p.standardizer.constant_flag.assign(names.size(), 0);
    return p;
}

Matrix Preprocessing::apply(const Dataset& raw) const {
    // Column-match by name; order in the file is not significant.
    std::vector<std::size_t> position(raw_feature_names.size());
    {
        std::vector<std::uint8_t> used(raw.feature_names.size(), 0);
        for (std::size_t i = 0; i < raw_feature_names.size(); ++i) {
            const auto it = std::find(raw.feature_names.begin(),
                                      raw.feature_names.end(), raw_feature_names[i]);
            if (it == raw.feature_names.end())
                throw Error("preprocess: data is missing expected column '" +
                            raw_feature_names[i] + "'");
            position[i] = static_cast<std::size_t>(it - raw.feature_names.begin());
            used[position[i]] = 1;
        }
        for (std::size_t c = 0; c < raw.feature_names.size(); ++c)
            if (!used[c])
                throw Error("preprocess: unknown column '" + raw.feature_names[c] +
                            "' not present in the model schema");
    }

    Matrix out(raw.n_rows(), kept_features.size());
    for (std::size_t j = 0; j < kept_features.size(); ++j) {
        const std::size_t src = position[kept_features[j]];
        const double mean = standardizer.mean[j];
        const double scale = standardizer.scale[j];
        const bool constant = standardizer.constant_flag[j] != 0;
        for (std::size_t r = 0; r < raw.n_rows(); ++r) {
            double v = raw.is_missing(r, src) ? impute_means[j] : raw.values(r, src);
            out(r, j) = constant ? 0.0 : (v - mean) / scale;
        }
    }
    return out;
}

}  // namespace stacktier
