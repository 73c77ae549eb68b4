#include <benchmark/benchmark.h>

#include "stacktier/dataset.hpp"
#include "stacktier/smote.hpp"

namespace {

using namespace stacktier;

void BM_SmoteOversample(benchmark::State& state) {
    SyntheticSpec spec;
    spec.n_rows = static_cast<std::size_t>(state.range(0));
    spec.positive_fraction = 0.2;
    const Dataset ds = generate_synthetic(spec);
    SmoteParams params;
    params.seed = 5;
    for (auto _ : state) benchmark::DoNotOptimize(smote_oversample(ds, params));
}
BENCHMARK(BM_SmoteOversample)->Arg(500)->Arg(2000)->Arg(8000);

void BM_GenerateSynthetic(benchmark::State& state) {
    SyntheticSpec spec;
    spec.n_rows = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(generate_synthetic(spec));
}
BENCHMARK(BM_GenerateSynthetic)->Arg(2000)->Arg(20000);

void BM_StratifiedSplit(benchmark::State& state) {
    SyntheticSpec spec;
    spec.n_rows = static_cast<std::size_t>(state.range(0));
    const Dataset ds = generate_synthetic(spec);
    for (auto _ : state) benchmark::DoNotOptimize(stratified_split(ds, 0.2, 9));
}
BENCHMARK(BM_StratifiedSplit)->Arg(2000)->Arg(20000);

}  // namespace
