#include <benchmark/benchmark.h>

#include <random>

#include "hgan/genmap.hpp"
#include "hgan/holder.hpp"
#include "hgan/metrics.hpp"
#include "hgan/poly.hpp"

using namespace hgan;

namespace {

std::vector<double> points(std::size_t n, int d) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> x(n * d);
    for (auto& v : x) v = u(rng);
    return x;
}

const ReluNet& holder_net() {
    static const ReluNet net = [] {
        auto b = HolderBudget::make(8, 2, 1.0, 2);
        return holder_approximator(builtin_target("sinusoid", 1.0, 2), b);
    }();
    return net;
}

void BM_EvalSerial(benchmark::State& st) {
    const auto& net = holder_net();
    auto x = points(st.range(0), 2);
    std::vector<double> y(st.range(0));
    for (auto _ : st) {
        eval_batch_serial(net, x.data(), st.range(0), y.data());
        benchmark::DoNotOptimize(y.data());
    }
    st.SetItemsProcessed(st.iterations() * st.range(0));
}

void BM_EvalParallel(benchmark::State& st) {
    const auto& net = holder_net();
    auto x = points(st.range(0), 2);
    std::vector<double> y(st.range(0));
    for (auto _ : st) {
        eval_batch(net, x.data(), st.range(0), y.data());
        benchmark::DoNotOptimize(y.data());
    }
    st.SetItemsProcessed(st.iterations() * st.range(0));
}

void BM_ProductNet(benchmark::State& st) {
    auto net = product_net(8, 3);
    auto x = points(100000, 2);
    std::vector<double> y(100000);
    for (auto _ : st) {
        eval_batch(net, x.data(), 100000, y.data());
        benchmark::DoNotOptimize(y.data());
    }
}

void BM_W1Dense(benchmark::State& st) {
    auto a = uniform_weights(uniform_cube_samples(st.range(0), 3, 1));
    auto b = uniform_weights(uniform_cube_samples(st.range(0), 3, 2));
    for (auto _ : st) benchmark::DoNotOptimize(w1_discrete_exact(a, b).first);
}

void BM_W1Certified(benchmark::State& st) {
    auto a = uniform_weights(uniform_cube_samples(st.range(0), 3, 1));
    auto b = uniform_weights(uniform_cube_samples(st.range(0), 3, 2));
    for (auto _ : st) benchmark::DoNotOptimize(w1_certified(a, b).value);
}

void BM_Memorize(benchmark::State& st) {
    auto g = random_discrete(capacity(29, 4, 3), 3, 5);
    for (auto _ : st) benchmark::DoNotOptimize(memorize_discrete(g, SourceSpec{}, 1e-2, 29, 4).certificate);
}

} // namespace

BENCHMARK(BM_EvalSerial)->Arg(1 << 10)->Arg(1 << 13)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EvalParallel)->Arg(1 << 10)->Arg(1 << 13)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ProductNet)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_W1Dense)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_W1Certified)->Arg(256)->Arg(1024)->Arg(4096)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Memorize)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
