#include <benchmark/benchmark.h>

#include "stacktier/dataset.hpp"
#include "stacktier/learner.hpp"

namespace {

using namespace stacktier;

Dataset bench_data(std::size_t rows) {
    SyntheticSpec spec;
    spec.n_rows = rows;
    spec.seed = 23;
    return generate_synthetic(spec);
}

void BM_FitTree(benchmark::State& state) {
    const Dataset ds = bench_data(static_cast<std::size_t>(state.range(0)));
    LearnerSpec spec{Family::tree, {{"max_depth", 8}}};
    for (auto _ : state)
        benchmark::DoNotOptimize(fit_learner(spec, ds.values, ds.labels, 1));
}
BENCHMARK(BM_FitTree)->Arg(500)->Arg(2000);

void BM_FitForest(benchmark::State& state) {
    const Dataset ds = bench_data(1000);
    LearnerSpec spec{Family::random_forest,
                     {{"n_trees", static_cast<double>(state.range(0))}}};
    for (auto _ : state)
        benchmark::DoNotOptimize(fit_learner(spec, ds.values, ds.labels, 1));
}
BENCHMARK(BM_FitForest)->Arg(50)->Arg(100);

void BM_FitGbm(benchmark::State& state) {
    const Dataset ds = bench_data(1000);
    LearnerSpec spec{Family::gbm,
                     {{"n_rounds", static_cast<double>(state.range(0))},
                      {"learning_rate", 0.1},
                      {"max_depth", 2}}};
    for (auto _ : state)
        benchmark::DoNotOptimize(fit_learner(spec, ds.values, ds.labels, 1));
}
BENCHMARK(BM_FitGbm)->Arg(50)->Arg(150);

void BM_FitXgb(benchmark::State& state) {
    const Dataset ds = bench_data(1000);
    LearnerSpec spec{Family::xgb,
                     {{"n_rounds", static_cast<double>(state.range(0))},
                      {"learning_rate", 0.1},
                      {"max_depth", 2},
                      {"lambda", 1.0}}};
    for (auto _ : state)
        benchmark::DoNotOptimize(fit_learner(spec, ds.values, ds.labels, 1));
}
BENCHMARK(BM_FitXgb)->Arg(50)->Arg(150);

void BM_FitLogreg(benchmark::State& state) {
    const Dataset ds = bench_data(2000);
    LearnerSpec spec{Family::logreg, {{"l2", 0.01}}};
    for (auto _ : state)
        benchmark::DoNotOptimize(fit_learner(spec, ds.values, ds.labels, 1));
}
BENCHMARK(BM_FitLogreg);

void BM_FitLinearSvc(benchmark::State& state) {
    const Dataset ds = bench_data(2000);
    LearnerSpec spec{Family::linear_svc, {{"C", 1.0}}};
    for (auto _ : state)
        benchmark::DoNotOptimize(fit_learner(spec, ds.values, ds.labels, 1));
}
BENCHMARK(BM_FitLinearSvc);

}  // namespace
