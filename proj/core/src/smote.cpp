#include "stacktier/smote.hpp"

#include <algorithm>
#include <cmath>

#include "stacktier/common.hpp"
#include "stacktier/rng.hpp"

namespace stacktier {

namespace {

long long round_half_up(double x) {
    return static_cast<long long>(std::floor(x + 0.5));
}

double squared_distance(const Dataset& ds, std::size_t a, std::size_t b) {
    double d2 = 0.0;
    for (std::size_t c = 0; c < ds.n_features(); ++c) {
        const double d = ds.values(a, c) - ds.values(b, c);
        d2 += d * d;
    }
    return d2;
}

}  // namespace

bool smote_needed(const Dataset& ds, const SmoteParams& params) {
    std::size_t minority = ds.positive_count();
    std::size_t majority = ds.n_rows() - minority;
    if (minority > majority) std::swap(minority, majority);
    const auto target = static_cast<std::size_t>(
        round_half_up(params.target_ratio * static_cast<double>(majority)));
    return minority < target;
}

Dataset smote_oversample(const Dataset& ds, const SmoteParams& params) {
    if (params.k_neighbors < 1)
        throw Error("smote: k_neighbors must be >= 1");
    if (!(params.target_ratio > 0.0 && params.target_ratio <= 1.0))
        throw Error("smote: target_ratio must be in (0, 1]");
    if (ds.has_missing())
        throw Error("smote: dataset still has missing values");

    std::vector<std::size_t> minority_rows, majority_rows;
    const std::size_t n_pos = ds.positive_count();
    const int minority_label = 2 * n_pos <= ds.n_rows() ? 1 : 0;
    for (std::size_t r = 0; r < ds.n_rows(); ++r)
        (ds.labels[r] == minority_label ? minority_rows : majority_rows).push_back(r);

    const auto target = static_cast<std::size_t>(round_half_up(
        params.target_ratio * static_cast<double>(majority_rows.size())));
    if (minority_rows.size() >= target) {
        log_warn("smote: minority class already at or above the target ratio, no-op");
        return ds;
    }
    if (minority_rows.size() <= static_cast<std::size_t>(params.k_neighbors))
        throw Error("smote: minority count " + std::to_string(minority_rows.size()) +
                    " must exceed k_neighbors " + std::to_string(params.k_neighbors));

    const std::size_t m = minority_rows.size();
    const std::size_t k = static_cast<std::size_t>(params.k_neighbors);

    // k nearest minority neighbors of each minority row, ties by lower
    // original row index (brute force; minority sets are small here).
    std::vector<std::vector<std::size_t>> neighbors(m);
    std::vector<std::pair<double, std::size_t>> dist;
    for (std::size_t i = 0; i < m; ++i) {
        dist.clear();
        for (std::size_t j = 0; j < m; ++j) {
            if (j == i) continue;
            dist.emplace_back(squared_distance(ds, minority_rows[i], minority_rows[j]),
                              minority_rows[j]);
        }
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k),
                          dist.end());
        neighbors[i].reserve(k);
        for (std::size_t t = 0; t < k; ++t) neighbors[i].push_back(dist[t].second);
    }

    const std::size_t n_synthetic = target - m;
    const std::size_t d = ds.n_features();
    Dataset out = ds;
    out.values.data.resize((ds.n_rows() + n_synthetic) * d);
    out.values.rows = ds.n_rows() + n_synthetic;
    out.missing_mask.resize(out.values.rows * d, 0);
    out.labels.resize(out.values.rows, minority_label);

    for (std::size_t s = 0; s < n_synthetic; ++s) {
        Rng rng(derive_seed(params.seed, "smote", static_cast<std::uint64_t>(s)));
        const std::size_t base_i = static_cast<std::size_t>(rng.next_below(m));
        const std::size_t base = minority_rows[base_i];
        const std::size_t nn = neighbors[base_i][rng.next_below(k)];
        const double u = rng.next_double();
        double* row = out.values.data.data() + (ds.n_rows() + s) * d;
        for (std::size_t c = 0; c < d; ++c)
            row[c] = ds.values(base, c) + u * (ds.values(nn, c) - ds.values(base, c));
    }
    return out;
}

}  // namespace stacktier
