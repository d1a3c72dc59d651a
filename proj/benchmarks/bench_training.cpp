#include "rctlab/evaluation.hpp"

#include <benchmark/benchmark.h>

using namespace rctlab;

namespace {

const std::vector<TrainingSample>& samples() {
    static const auto out = [] {
        std::vector<SessionTrace> traces;
        for (const auto& s : training_sessions(10, 101))
            traces.push_back(simulate_session(s));
        return samples_from_traces(traces, default_ocv_curve());
    }();
    return out;
}

RbfModel untrained(std::size_t n) {
    std::vector<RbfInput> inputs;
    for (const auto& s : samples())
        inputs.push_back(s.input());
    auto c = fit_centers(inputs, n, 1);
    return RbfModel(c.centers, c.spreads, std::vector<double>(c.centers.size(), 0.0), c.scaling);
}

} // namespace

static void BM_FitCenters(benchmark::State& state) {
    std::vector<RbfInput> inputs;
    for (const auto& s : samples())
        inputs.push_back(s.input());
    for (auto _ : state)
        benchmark::DoNotOptimize(fit_centers(inputs, static_cast<std::size_t>(state.range(0)), 1));
}
BENCHMARK(BM_FitCenters)->Arg(25)->Unit(benchmark::kMillisecond);

static void BM_FitWeights(benchmark::State& state) {
    auto model = untrained(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state)
        benchmark::DoNotOptimize(fit_weights(model, samples()));
}
BENCHMARK(BM_FitWeights)->Arg(25)->Arg(150)->Unit(benchmark::kMillisecond);

static void BM_OnlineUpdate(benchmark::State& state) {
    auto model = fit_weights(untrained(25), samples()).model;
    TrainingBuffer buffer;
    for (std::size_t i = 0; i < samples().size(); i += 10)
        buffer.ingest(samples()[i]);
    for (auto _ : state)
        benchmark::DoNotOptimize(online_update(model, buffer));
}
BENCHMARK(BM_OnlineUpdate)->Unit(benchmark::kMillisecond);
