#include <doctest.h>

#include <cmath>

#include "stacktier/common.hpp"
#include "stacktier/smote.hpp"
#include "test_support.hpp"

using namespace stacktier;

namespace {

// Distance from point p to the segment [a, b].
double segment_distance(std::span<const double> p, std::span<const double> a,
                        std::span<const double> b) {
    double ab2 = 0.0, ap_ab = 0.0;
    for (std::size_t c = 0; c < p.size(); ++c) {
        ab2 += (b[c] - a[c]) * (b[c] - a[c]);
        ap_ab += (p[c] - a[c]) * (b[c] - a[c]);
    }
    const double t = ab2 > 0.0 ? std::clamp(ap_ab / ab2, 0.0, 1.0) : 0.0;
    double d2 = 0.0;
    for (std::size_t c = 0; c < p.size(); ++c) {
        const double proj = a[c] + t * (b[c] - a[c]);
        d2 += (p[c] - proj) * (p[c] - proj);
    }
    return std::sqrt(d2);
}

Dataset imbalanced_dataset(std::uint64_t seed, std::size_t minority,
                           std::size_t majority, std::size_t cols) {
    Rng rng(seed);
    auto ds = Dataset::with_shape(
        [&] {
            std::vector<std::string> names;
            for (std::size_t c = 0; c < cols; ++c) names.push_back("f" + std::to_string(c));
            return names;
        }(),
        minority + majority);
    for (std::size_t r = 0; r < ds.n_rows(); ++r) {
        ds.labels[r] = r < minority ? 1 : 0;
        for (std::size_t c = 0; c < cols; ++c) ds.values(r, c) = rng.next_normal();
    }
    return ds;
}

}  // namespace

TEST_CASE("two-point minority with k=1 interpolates on the diagonal") {
    auto ds = Dataset::with_shape({"x", "y"}, 6);
    // minority: (0,0) and (1,1); majority: four spread points
    ds.labels = {1, 1, 0, 0, 0, 0};
    ds.values(1, 0) = 1.0;
    ds.values(1, 1) = 1.0;
    for (std::size_t r = 2; r < 6; ++r) {
        ds.values(r, 0) = 5.0 + static_cast<double>(r);
        ds.values(r, 1) = -3.0;
    }
    SmoteParams params;
    params.k_neighbors = 1;
    params.seed = 11;
    const auto out = smote_oversample(ds, params);
    CHECK(out.n_rows() == 8);  // 2 synthetics to reach 4/4
    for (std::size_t r = 6; r < 8; ++r) {
        CHECK(out.labels[r] == 1);
        CHECK(out.values(r, 0) == doctest::Approx(out.values(r, 1)).epsilon(1e-12));
        CHECK(out.values(r, 0) >= 0.0);
        CHECK(out.values(r, 0) <= 1.0);
    }
}

TEST_CASE("smote count arithmetic: 20/80 at ratio 1.0 appends 60") {
    const auto ds = imbalanced_dataset(3, 20, 80, 4);
    SmoteParams params;
    params.seed = 5;
    const auto out = smote_oversample(ds, params);
    CHECK(out.n_rows() == 160);
    CHECK(out.positive_count() == 80);
}

TEST_CASE("smote preconditions") {
    const auto ds = imbalanced_dataset(4, 5, 20, 3);
    SmoteParams params;
    params.k_neighbors = 5;  // minority count 5 <= k
    CHECK_THROWS_AS(smote_oversample(ds, params), Error);

    auto masked = imbalanced_dataset(5, 10, 20, 3);
    masked.set_missing(0, 0, true);
    CHECK_THROWS_AS(smote_oversample(masked, SmoteParams{}), Error);

    // already balanced: no-op with a warning
    const auto balanced = imbalanced_dataset(6, 30, 30, 3);
    const auto out = smote_oversample(balanced, SmoteParams{});
    CHECK(out.n_rows() == balanced.n_rows());
}

TEST_CASE("smote geometry, label, and untouched-majority properties") {
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
        Rng sizes(derive_seed(seed, "sizes"));
        const std::size_t minority = 8 + sizes.next_below(12);
        const std::size_t majority = minority + 10 + sizes.next_below(40);
        const auto ds = imbalanced_dataset(seed, minority, majority, 3);

        SmoteParams params;
        params.k_neighbors = 5;
        params.seed = seed;
        const auto out = smote_oversample(ds, params);

        CHECK(out.positive_count() == majority);  // exact balance
        // originals byte-identical
        for (std::size_t r = 0; r < ds.n_rows(); ++r) {
            CHECK(out.labels[r] == ds.labels[r]);
            for (std::size_t c = 0; c < ds.n_features(); ++c)
                CHECK(out.values(r, c) == ds.values(r, c));
        }
        // every synthetic point sits on a segment between two minority rows
        for (std::size_t s = ds.n_rows(); s < out.n_rows(); ++s) {
            CHECK(out.labels[s] == 1);
            double best = 1e300;
            for (std::size_t a = 0; a < minority; ++a) {
                for (std::size_t b = 0; b < minority; ++b) {
                    if (a == b) continue;
                    best = std::min(best, segment_distance(out.values.row(s),
                                                           ds.values.row(a),
                                                           ds.values.row(b)));
                }
            }
            CHECK(best < 1e-9);
        }
    }
}

TEST_CASE("smote is deterministic under a fixed seed") {
    const auto ds = imbalanced_dataset(9, 15, 60, 5);
    SmoteParams params;
    params.seed = 123;
    const auto a = smote_oversample(ds, params);
    const auto b = smote_oversample(ds, params);
    CHECK(a.values.data == b.values.data);
    CHECK(a.labels == b.labels);
}
