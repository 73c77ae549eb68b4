#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stacktier/matrix.hpp"

namespace stacktier {

/// Feature matrix with per-cell missingness mask and binary labels
/// (1 = positive class). Immutable by convention after construction;
/// preprocessing ops return transformed copies.
struct Dataset {
    std::vector<std::string> feature_names;
    Matrix values;                          // N x D
    std::vector<std::uint8_t> missing_mask; // N x D, 1 = missing
    std::vector<int> labels;                // N entries in {0, 1}

    std::size_t n_rows() const { return values.rows; }
    std::size_t n_features() const { return values.cols; }

    bool is_missing(std::size_t r, std::size_t c) const {
        return missing_mask[r * values.cols + c] != 0;
    }
    void set_missing(std::size_t r, std::size_t c, bool m) {
        missing_mask[r * values.cols + c] = m ? 1 : 0;
    }

    bool has_missing() const;
    std::size_t positive_count() const;

    static Dataset with_shape(std::vector<std::string> names, std::size_t rows);

    Dataset subset_rows(const std::vector<std::size_t>& idx) const;
    Dataset subset_features(const std::vector<std::size_t>& feature_idx) const;

    /// Validates the structural invariants (shape agreement, unique
    /// feature names, binary labels); throws Error on violation.
    void validate() const;
};

struct Standardizer {
    std::vector<double> mean;
    std::vector<double> scale;               // population std, 1.0 when constant
    std::vector<std::uint8_t> constant_flag; // constant features map to 0
};

/// Stratified k-fold assignment over a dataset's rows.
struct FoldPlan {
    int k = 0;
    std::vector<int> assignment; // per row, in [0, k)

    std::uint64_t id() const;
    std::vector<std::size_t> fold_rows(int fold) const;
    std::vector<std::size_t> complement_rows(int fold) const;
    std::vector<std::size_t> complement_rows(int fold_a, int fold_b) const;
};

struct SyntheticSpec {
    std::size_t n_rows = 2000;
    std::size_t n_features = 25;
    std::size_t n_informative = 10;
    double positive_fraction = 0.2;
    double class_separation = 1.5;
    std::uint64_t seed = 7;
};

/// Frozen preprocessing state embedded into trained models: the raw
/// schema seen at load time, the retained-feature list, training-set
/// imputation means, and the fitted standardizer. Applying it to raw
/// rows never refits anything.
struct Preprocessing {
    std::vector<std::string> raw_feature_names;
    std::string label_column;
    std::vector<std::string> missing_tokens;
    std::vector<std::size_t> kept_features;  // indices into raw_feature_names
    std::vector<double> impute_means;        // per kept feature
    Standardizer standardizer;               // per kept feature

    /// Pass-through state for data that is already numeric and clean.
    static Preprocessing identity(const std::vector<std::string>& names);

    /// Column-matches a raw dataset against the stored schema, applies
    /// keep-list, imputation, and standardization, and returns the model
    /// input matrix. Throws on unknown or missing columns.
    Matrix apply(const Dataset& raw) const;
};

// -- tabular operations ----------------------------------------------------

Dataset load_csv(const std::string& path, const std::string& label_column,
                 const std::vector<std::string>& missing_tokens);

/// Writes the same CSV dialect load_csv reads; masked cells become
/// empty fields.
void write_csv(const Dataset& ds, const std::string& path,
               const std::string& label_column = "label");

/// Retains exactly the features whose missing fraction is <= the
/// threshold (strictly greater fractions are dropped).
Dataset drop_high_missing(const Dataset& ds, double max_missing_fraction);

struct ImputeResult {
    Dataset data;
    std::vector<double> means;
};

/// Replaces masked cells with the per-feature observed mean and clears
/// the mask. The returned means are reusable on unseen data.
ImputeResult impute_mean(const Dataset& ds);

/// Fills masked cells with previously fitted means (no refitting).
Dataset apply_impute(const Dataset& ds, const std::vector<double>& means);

Standardizer fit_standardizer(const Dataset& ds);
Dataset apply_standardizer(const Standardizer& s, const Dataset& ds);

struct SplitResult {
    Dataset train;
    Dataset test;
    std::vector<std::size_t> train_rows;  // original row indices
    std::vector<std::size_t> test_rows;
};

/// Per-class test counts are round-half-up(class_count * test_fraction).
/// Assignment is keyed on row content, so it is invariant under row
/// permutations of the input.
SplitResult stratified_split(const Dataset& ds, double test_fraction,
                             std::uint64_t seed);

FoldPlan make_folds(const Dataset& ds, int k, std::uint64_t seed);

/// Class-conditional Gaussian generator: the first n_informative
/// features of positive rows are shifted by class_separation, all
/// remaining features are pure noise.
Dataset generate_synthetic(const SyntheticSpec& spec);

}  // namespace stacktier
