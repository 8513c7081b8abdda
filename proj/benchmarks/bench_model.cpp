// Scaling of forward, training step and forest fit with the lookback length.
// The mixing-layer cost should track O(L) when W = H = sqrt(L).

#include <benchmark/benchmark.h>

#include "iipmixer/forest.hpp"
#include "iipmixer/harness.hpp"
#include "iipmixer/metrics.hpp"
#include "iipmixer/model.hpp"

using namespace iipm;

namespace {

MixerConfig square_config(std::size_t lookback) {
    MixerConfig cfg;
    cfg.channels = 2;
    cfg.lookback = lookback;
    cfg.horizon = 1;
    std::size_t w = 1;
    while ((w + 1) * (w + 1) <= lookback) ++w;
    cfg.patch_len = w;  // exact sqrt for the benchmarked sizes
    cfg.n_blocks = 2;
    return cfg;
}

Matrix random_window(std::size_t channels, std::size_t lookback, Rng& rng) {
    Matrix m(channels, lookback);
    for (double& v : m.values()) v = rng.uniform(-1.0, 1.0);
    return m;
}

} // namespace

static void BM_MixerForward(benchmark::State& state) {
    const std::size_t lookback = static_cast<std::size_t>(state.range(0));
    Rng rng(1);
    const MixerModel model(square_config(lookback), rng);
    const Matrix window = random_window(2, lookback, rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(model.predict(window));
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_MixerForward)->Arg(16)->Arg(64)->Arg(256)->Arg(1024)->Complexity(benchmark::oN);

static void BM_MixerTrainStep(benchmark::State& state) {
    const std::size_t lookback = static_cast<std::size_t>(state.range(0));
    Rng rng(2);
    MixerModel model(square_config(lookback), rng);
    const Matrix window = random_window(2, lookback, rng);
    const Matrix truth = random_window(2, 1, rng);
    const FeatureWeights weights = FeatureWeights::uniform(2);
    const auto params = model.parameters();
    const SgdState sgd(1e-6);
    for (auto _ : state) {
        Tape tape;
        auto preds = model.forward_channels(tape, window, true, nullptr);
        const auto loss = wmse_loss_node(tape, preds, truth, weights);
        tape.backward(loss);
        std::vector<Matrix> grads;
        grads.reserve(params.size());
        for (const Matrix* p : params) grads.push_back(tape.grad_for(p));
        sgd_step(sgd, params, grads);
        benchmark::DoNotOptimize(grads);
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_MixerTrainStep)->Arg(16)->Arg(64)->Arg(256)->Complexity(benchmark::oN);

static void BM_ForestFit(benchmark::State& state) {
    const std::size_t samples = static_cast<std::size_t>(state.range(0));
    Rng rng(3);
    Matrix x(samples, 8);
    for (double& v : x.values()) v = rng.uniform(0.0, 1.0);
    std::vector<double> y(samples);
    for (std::size_t i = 0; i < samples; ++i) y[i] = x(i, 0) + 0.1 * rng.normal();
    ForestConfig cfg;
    cfg.n_trees = 20;
    for (auto _ : state) {
        benchmark::DoNotOptimize(RandomForest::fit(x, y, cfg, 7));
    }
}
BENCHMARK(BM_ForestFit)->Arg(128)->Arg(512);

BENCHMARK_MAIN();
