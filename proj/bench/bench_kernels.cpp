// Serial reference path vs OpenMP path for the parallel kernels.
// Arg 0 = serial, 1 = parallel.

#include <benchmark/benchmark.h>

#include "socsim/boundary.hpp"
#include "socsim/metrics.hpp"
#include "socsim/scripted_backend.hpp"
#include "socsim/simulation.hpp"
#include "socsim/stats.hpp"
#include "support.hpp"

using namespace socsim;

namespace {

ExecPolicy policy(const benchmark::State& st) { return st.range(0) ? ExecPolicy::parallel : ExecPolicy::serial; }

const ScenarioSpec& study1() {
    static const ScenarioSpec s = load_scenario(test_support::scenario_path("study1"));
    return s;
}

const std::vector<Event>& big_log() {
    static const std::vector<Event> log = [] {
        Rng rng(1);
        return test_support::random_log(rng, 200, 6, 400, 120, 0.8).events;
    }();
    return log;
}

void BM_EngineStep(benchmark::State& st) {
    const auto& s = study1();
    const Engine engine(s, build_scenario_population(s), policy(st));
    ScriptedBackend backend(s);
    const auto world = engine.init_world().world;
    for (auto _ : st) benchmark::DoNotOptimize(engine.run_step(world, backend, {}));
}

void BM_EmotionTrajectories(benchmark::State& st) {
    const auto& log = big_log();
    const auto grouping = grouping_from_log(log);
    for (auto _ : st) benchmark::DoNotOptimize(emotion_trajectories(log, grouping, 3, policy(st)));
}

void BM_Centrality(benchmark::State& st) {
    const auto& log = big_log();
    for (auto _ : st) benchmark::DoNotOptimize(centrality_series(log, 10, policy(st)));
}

void BM_Tukey(benchmark::State& st) {
    Rng rng(2);
    std::vector<std::pair<std::string, std::vector<double>>> groups;
    for (int g = 0; g < 8; ++g) {
        std::vector<double> v;
        for (int i = 0; i < 30; ++i) v.push_back(rng.uniform01() + 0.1 * g);
        groups.emplace_back("g" + std::to_string(g), v);
    }
    for (auto _ : st) benchmark::DoNotOptimize(tukey_hsd(groups, 0.05, policy(st)));
}

}  // namespace

BENCHMARK(BM_EngineStep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EmotionTrajectories)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Centrality)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Tukey)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
