#include "rctlab/rct_engine.hpp"
#include "rctlab/sim_harness.hpp"

#include <benchmark/benchmark.h>

using namespace rctlab;

namespace {

const RbfModel& law_like_model() {
    static const RbfModel model = [] {
        std::vector<RbfInput> centers;
        for (int i = 0; i < 25; ++i)
            centers.push_back({0.04 * i, 0.5, 25.0});
        InputScaling sc;
        sc.axes[2] = {10.0, 30.0};
        return RbfModel(centers, std::vector<double>(25, 0.08), std::vector<double>(25, 0.02), sc);
    }();
    return model;
}

} // namespace

static void BM_EstimateCcThenCv(benchmark::State& state) {
    BatteryParams b;
    AccuracyState acc;
    acc.eta_cc = 0.75;
    SessionState s{0.1, 0.1, 0.95, 25.0, Stage::CC};
    for (auto _ : state)
        benchmark::DoNotOptimize(estimate(s, fast_charge_profile(), b, default_ocv_curve(), acc,
                                          law_like_model()));
}
BENCHMARK(BM_EstimateCcThenCv);

static void BM_RctCv(benchmark::State& state) {
    BatteryParams b;
    for (auto _ : state)
        benchmark::DoNotOptimize(rct_cv({0.71, 0.9}, law_like_model(), b, default_ocv_curve(), 0.71, 25.0));
}
BENCHMARK(BM_RctCv);

static void BM_SimulateCcSession(benchmark::State& state) {
    auto setup = paper_scenario_cc(7);
    for (auto _ : state)
        benchmark::DoNotOptimize(simulate_session(setup));
}
BENCHMARK(BM_SimulateCcSession)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
