#include <benchmark/benchmark.h>

#include <vector>

#include "stacktier/metrics.hpp"
#include "stacktier/rng.hpp"

namespace {

using namespace stacktier;

struct Scored {
    std::vector<double> scores;
    std::vector<int> labels;
};

Scored make_scored(std::size_t n, bool ties) {
    Rng rng(17);
    Scored s;
    s.scores.resize(n);
    s.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        s.scores[i] = ties ? static_cast<double>(rng.next_below(16)) / 16.0
                           : rng.next_double();
        s.labels[i] = rng.next_double() < 0.3 ? 1 : 0;
    }
    s.labels[0] = 1;
    s.labels[n - 1] = 0;
    return s;
}

void BM_RocAuc(benchmark::State& state) {
    const auto s = make_scored(static_cast<std::size_t>(state.range(0)), false);
    for (auto _ : state) benchmark::DoNotOptimize(roc_auc(s.scores, s.labels));
}
BENCHMARK(BM_RocAuc)->Arg(1000)->Arg(10000)->Arg(100000);

void BM_RocAucHeavyTies(benchmark::State& state) {
    const auto s = make_scored(static_cast<std::size_t>(state.range(0)), true);
    for (auto _ : state) benchmark::DoNotOptimize(roc_auc(s.scores, s.labels));
}
BENCHMARK(BM_RocAucHeavyTies)->Arg(10000);

void BM_AveragePrecision(benchmark::State& state) {
    const auto s = make_scored(static_cast<std::size_t>(state.range(0)), false);
    for (auto _ : state)
        benchmark::DoNotOptimize(average_precision(s.scores, s.labels));
}
BENCHMARK(BM_AveragePrecision)->Arg(1000)->Arg(10000)->Arg(100000);

void BM_FullReport(benchmark::State& state) {
    const auto s = make_scored(static_cast<std::size_t>(state.range(0)), false);
    for (auto _ : state)
        benchmark::DoNotOptimize(full_report(s.scores, s.labels, 0.5));
}
BENCHMARK(BM_FullReport)->Arg(10000);

}  // namespace
