#include <benchmark/benchmark.h>

#include "idcap/baselines.hpp"
#include "idcap/ggd.hpp"
#include "idcap/metrics.hpp"
#include "idcap/model.hpp"
#include "idcap/rng.hpp"
#include "idcap/special_functions.hpp"

using namespace idcap;

namespace {

Tensor random_image(std::size_t n, uint64_t seed) {
    Rng rng(seed);
    Tensor t({1, n, n});
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform01();
    return t;
}

void BM_log_gamma(benchmark::State& state) {
    double x = 0.37;
    for (auto _ : state) {
        benchmark::DoNotOptimize(log_gamma(x));
        x += 0.1;
        if (x > 900.0) x = 0.37;
    }
}
BENCHMARK(BM_log_gamma);

void BM_ggd_nll_grad(benchmark::State& state) {
    const GGDParams p(0.2, 0.4, 1.7);
    double y = -2.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(ggd_nll_grad(y, p));
        y += 1e-4;
        if (y > 2.0) y = -2.0;
    }
}
BENCHMARK(BM_ggd_nll_grad);

void BM_ggd_sample(benchmark::State& state) {
    const GGDParams p(0.0, 1.0, static_cast<double>(state.range(0)) / 10.0);
    Rng rng(4);
    for (auto _ : state) {
        benchmark::DoNotOptimize(ggd_sample(p, rng));
    }
}
BENCHMARK(BM_ggd_sample)->Arg(7)->Arg(20)->Arg(30);

void BM_conv_forward(benchmark::State& state) {
    Network net;
    net.layers.push_back(make_conv(3, 16, 16));
    Rng rng(5);
    init_params(net, rng);
    Tensor x({16, 16, 16});
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.uniform01();
    for (auto _ : state) {
        benchmark::DoNotOptimize(forward(net, x));
    }
}
BENCHMARK(BM_conv_forward);

void BM_cap_forward(benchmark::State& state) {
    Model cap = make_cap_model(16);
    init_model(cap, 6);
    const Tensor y_hat = random_image(16, 7);
    for (auto _ : state) {
        benchmark::DoNotOptimize(cap_forward(cap, y_hat));
    }
}
BENCHMARK(BM_cap_forward);

void BM_ssim(benchmark::State& state) {
    const Tensor a = random_image(16, 8);
    const Tensor b = random_image(16, 9);
    for (auto _ : state) {
        benchmark::DoNotOptimize(ssim(a, b, 8));
    }
}
BENCHMARK(BM_ssim);

void BM_uce(benchmark::State& state) {
    Rng rng(10);
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    std::vector<double> sq(n), var(n);
    for (std::size_t i = 0; i < n; ++i) {
        sq[i] = rng.uniform(0.0, 1.0);
        var[i] = rng.uniform(0.0, 1.0);
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(uce(sq, var, 100));
    }
}
BENCHMARK(BM_uce)->Arg(1 << 12)->Arg(1 << 16);

void BM_ttda_pass(benchmark::State& state) {
    Network base = make_base_net(16);
    Rng rng(11);
    init_params(base, rng);
    const Tensor x = random_image(16, 12);
    AugmentSpec spec;
    spec.kind = AugmentSpec::Kind::combined;
    spec.passes = 1;
    Rng pass_rng(13);
    for (auto _ : state) {
        benchmark::DoNotOptimize(ttda(base, x, spec, pass_rng));
    }
}
BENCHMARK(BM_ttda_pass);

}  // namespace

BENCHMARK_MAIN();
