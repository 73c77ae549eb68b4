#pragma once

#include <cstdint>

#include "stacktier/dataset.hpp"

namespace stacktier {

struct SmoteParams {
    int k_neighbors = 5;
    double target_ratio = 1.0;  // minority/majority after sampling, in (0, 1]
    std::uint64_t seed = 0;
};

/// Appends synthetic minority rows x + u * (x_nn - x), u ~ U[0,1], until
/// minority count = round(target_ratio * majority count). Neighbor search
/// is exact brute-force Euclidean over minority rows, ties broken by
/// lower row index. Original rows are untouched; already-balanced input
/// is returned unchanged with a warning. Each synthetic sample draws from
/// its own counter-derived seed stream, so generation order and thread
/// count cannot affect the result.
Dataset smote_oversample(const Dataset& ds, const SmoteParams& params);

/// True when the minority class is below the target ratio, i.e. when
/// smote_oversample would actually append rows. Callers that expect
/// pre-balanced data use this to skip the no-op (and its warning).
bool smote_needed(const Dataset& ds, const SmoteParams& params);

}  // namespace stacktier
