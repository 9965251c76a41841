#include <benchmark/benchmark.h>

#include "flowcast/dataset.hpp"
#include "flowcast/lstm.hpp"
#include "flowcast/svr.hpp"
#include "flowcast/training.hpp"

using namespace flowcast;

namespace {

std::vector<double> window(Rng& rng, std::size_t n) {
    std::vector<double> x(n);
    for (auto& v : x) v = rng.uniform();
    return x;
}

}  // namespace

// Standard layout: 12 variables, 12 steps; range over hidden size.
static void BM_LstmForward(benchmark::State& state) {
    Rng rng(1);
    const auto p = LstmParams::init(rng, 12, static_cast<std::size_t>(state.range(0)), 12);
    const auto x = window(rng, 144);
    for (auto _ : state) benchmark::DoNotOptimize(lstm_predict(p, x));
}
BENCHMARK(BM_LstmForward)->Arg(16)->Arg(64);

static void BM_LstmForwardBackward(benchmark::State& state) {
    Rng rng(1);
    const auto p = LstmParams::init(rng, 12, static_cast<std::size_t>(state.range(0)), 12);
    auto grads = zeros_like(p);
    const auto x = window(rng, 144);
    for (auto _ : state) {
        accumulate_gradient(p, x, 0.1, grads);
        benchmark::ClobberMemory();
    }
}
BENCHMARK(BM_LstmForwardBackward)->Arg(16)->Arg(64);

static void BM_RbfKernel(benchmark::State& state) {
    Rng rng(2);
    const auto a = window(rng, 144), b = window(rng, 144);
    for (auto _ : state) benchmark::DoNotOptimize(rbf_kernel(a, b, 0.165));
}
BENCHMARK(BM_RbfKernel);

static void BM_SvrFit(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    Rng rng(3);
    Matrix x(n, 144);
    std::vector<double> y(n);
    for (auto& v : x.span()) v = rng.uniform();
    for (auto& v : y) v = rng.uniform();
    for (auto _ : state) benchmark::DoNotOptimize(svr_fit(x, y, SvrOptions{}));
}
BENCHMARK(BM_SvrFit)->Arg(250)->Arg(1000)->Unit(benchmark::kMillisecond);

static void BM_Windowing(benchmark::State& state) {
    Rng rng(4);
    SyntheticConfig sc;
    const auto table = generate_synthetic(rng, sc);
    for (auto _ : state) benchmark::DoNotOptimize(series_to_supervised(table, 12, 6, VariableSet{}));
}
BENCHMARK(BM_Windowing)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
