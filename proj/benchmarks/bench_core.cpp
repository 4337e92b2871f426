#include <benchmark/benchmark.h>

#include <filesystem>

#include "mcast/bdqn.hpp"
#include "mcast/policies.hpp"
#include "mcast/scenario.hpp"
#include "mcast/slot_division.hpp"
#include "mcast/watch_prob.hpp"

using namespace mcast;

namespace {

const QoeContext kContext{2.0, 4e9, 10e9};

std::vector<SmgLoad> random_loads(Rng &rng, int smgs) {
    std::vector<SmgLoad> loads(static_cast<std::size_t>(smgs));
    for (auto &load : loads) {
        const int n = 1 + static_cast<int>(uniform_index(rng, 8));
        for (int m = 0; m < n; ++m) {
            load.selected_mb.push_back(uniform(rng, 1.0, 3.4));
            load.priorities.push_back(n - m);
        }
        load.min_rate_bps = uniform(rng, 2e6, 30e6);
        load.buffer_s = uniform(rng, 0.0, 8.0);
        load.lambda_rebuffer = 0.3;
        load.lambda_variation = 0.6;
    }
    return loads;
}

const Scenario &default_scenario() {
    static const Scenario s = load_scenario(std::filesystem::path(MCAST_CONFIG_DIR) / "default.json");
    return s;
}

}  // namespace

static void BM_SqpSolve(benchmark::State &state) {
    Rng rng(1);
    std::vector<TransformedObjective> problems;
    for (int i = 0; i < 64; ++i)
        problems.push_back(TransformedObjective::from_loads(random_loads(rng, static_cast<int>(state.range(0))), kContext));
    std::size_t k = 0;
    for (auto _ : state) {
        const auto &objective = problems[k++ % problems.size()];
        benchmark::DoNotOptimize(slsqp_optimize(objective, initial_split(objective, 1e-4)));
    }
}
BENCHMARK(BM_SqpSolve)->Arg(2)->Arg(3)->Arg(8)->Arg(32);

static void BM_EvaluateQoe(benchmark::State &state) {
    Rng rng(2);
    const auto loads = random_loads(rng, 3);
    const std::vector<double> beta{0.3, 0.3, 0.4};
    for (auto _ : state) benchmark::DoNotOptimize(evaluate_qoe(loads, beta, kContext));
}
BENCHMARK(BM_EvaluateQoe);

static void BM_WatchDistribution(benchmark::State &state) {
    const auto &catalog = default_scenario().catalog;
    for (auto _ : state) benchmark::DoNotOptimize(compute_distribution(catalog, {0, 0}));
}
BENCHMARK(BM_WatchDistribution);

// Default-sized network: 3 SMGs x 8 plan slots x 4 versions.
static void BM_NetworkForward(benchmark::State &state) {
    BranchingNetwork net({9, {512, 256, 256, 128}, 24, 4}, 3);
    Rng rng(3);
    Eigen::MatrixXd states(9, state.range(0));
    for (Eigen::Index c = 0; c < states.cols(); ++c)
        for (Eigen::Index r = 0; r < states.rows(); ++r) states(r, c) = uniform01(rng);
    for (auto _ : state) benchmark::DoNotOptimize(net.evaluate(states));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_NetworkForward)->Arg(1)->Arg(64);

static void BM_TrainingStep(benchmark::State &state) {
    AgentConfig config;
    BdqnAgent agent(NetworkShape{9, {512, 256, 256, 128}, 24, 4}, config);
    Rng rng(4);
    auto transition = [&] {
        Transition t;
        for (int i = 0; i < 9; ++i) {
            t.state.push_back(uniform01(rng));
            t.next_state.push_back(uniform01(rng));
        }
        for (int b = 0; b < 24; ++b) t.actions.push_back(static_cast<int>(uniform_index(rng, 4)));
        t.reward = uniform01(rng);
        return t;
    };
    for (int i = 0; i < config.batch_size; ++i) (void)agent.observe(transition());
    for (auto _ : state) benchmark::DoNotOptimize(agent.observe(transition()));
}
BENCHMARK(BM_TrainingStep)->Unit(benchmark::kMillisecond);

static void BM_HeuristicDecide(benchmark::State &state) {
    Environment env(default_scenario());
    env.reset(1);
    HeuristicPolicy policy;
    for (auto _ : state) benchmark::DoNotOptimize(policy.decide(env));
}
BENCHMARK(BM_HeuristicDecide)->Unit(benchmark::kMillisecond);

static void BM_EnvironmentEpisode(benchmark::State &state) {
    for (auto _ : state) {
        Environment env(default_scenario());
        RandomPolicy policy(5);
        benchmark::DoNotOptimize(run_episode(env, policy, 5));
    }
}
BENCHMARK(BM_EnvironmentEpisode)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
