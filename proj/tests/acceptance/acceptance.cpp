// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "mcast/bdqn.hpp"
#include "mcast/buffering.hpp"
#include "mcast/policies.hpp"
#include "mcast/qoe.hpp"
#include "mcast/scenario.hpp"
#include "mcast/slot_division.hpp"
#include "mcast/stats.hpp"
#include "mcast/virtual_buffers.hpp"
#include "mcast/watch_prob.hpp"
#include "oracles.hpp"

#ifdef MCAST_HAVE_CLI
#include "cli.hpp"
#endif

using namespace mcast;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point start) { return std::chrono::duration<double>(Clock::now() - start).count(); }

const QoeContext kContext{2.0, 4e9, 10e9};

// Collects worked-example mismatches beyond 1e-9.
struct Worked {
    int checked = 0;
    std::vector<std::string> misses;
    void operator()(const std::string &name, double got, double expected) {
        ++checked;
        const bool same = std::isinf(expected) ? got == expected : std::abs(got - expected) <= 1e-9;
        if (!same) misses.push_back(fmt::format("{}: {} != {}", name, got, expected));
    }
};

VideoCatalog catalog_of(const std::vector<std::vector<double>> &p) {
    std::vector<Video> videos;
    for (const auto &row : p) {
        Video v;
        for (double x : row) v.segments.push_back(Segment{x, {1.0, 0.5}});
        videos.push_back(v);
    }
    return VideoCatalog(videos, 2.0);
}

Outcome formula_oracles() {
    Worked check;
    check("next 0.8,0.25", next_segment_prob(0.8, 0.25), 0.6);
    check("next w,0", next_segment_prob(0.37, 0.0), 0.37);
    check("next w,1", next_segment_prob(0.37, 1.0), 0.0);
    check("first 1,[.5,.3]", first_segment_prob(1.0, std::vector<double>{0.5, 0.3}), 0.65);
    check("first 1,[1]", first_segment_prob(1.0, std::vector<double>{1.0}), 1.0);
    check("first .5,[.2,.4,.1]", first_segment_prob(0.5, std::vector<double>{0.2, 0.4, 0.1}),
          0.5 * (0.2 + 0.4 * 0.8 + 0.1 * 0.8 * 0.6));
    check("subsequent .65,[.2]", subsequent_segment_prob(0.65, std::vector<double>{0.2}), 0.52);
    check("subsequent 1,[.1,.1]", subsequent_segment_prob(1.0, std::vector<double>{0.1, 0.1}), 0.81);
    {
        const auto dist = compute_distribution(catalog_of({{0.5, 0.3}, {0.4}}), {0, 0});
        check("w(0,0)", dist.at({0, 0}), 1.0);
        check("w(0,1)", dist.at({0, 1}), 0.5);
        check("w(1,0)", dist.at({1, 0}), 0.65);
    }

    SystemResources unit;
    unit.bandwidth_hz = 10e6;
    unit.downlink_power_w = 1.0;
    unit.noise_power_w = 1.0;
    check("rate snr 3", data_rate(3.0, unit), 20e6);
    check("rate h 0", data_rate(0.0, unit), 0.0);
    unit.bandwidth_hz = 1.0;
    check("rate 1 Hz", data_rate(1.0, unit), 1.0);
    check("n_buffer (2,6)", buffer_requirement(std::vector<double>{2.0, 6.0}, 5.0, 2.0), 1.5);
    check("n_buffer full", buffer_requirement(std::vector<double>{5.0, 9.0}, 5.0, 2.0), 0.0);
    check("n_buffer (0,0)", buffer_requirement(std::vector<double>{0.0, 0.0}, 5.0, 2.0), 5.0);
    check("bandwidth 3 Mb", count_affordable(std::vector<double>(8, 3.0), 10.0, 8), 3);
    check("bandwidth 0", count_affordable(std::vector<double>(8, 3.0), 0.0, 8), 0);
    check("bandwidth (2,5,5)", count_affordable(std::vector<double>{2.0, 5.0, 5.0}, 8.0, 8), 2);
    check("computing 8 Gc", count_affordable(std::vector<double>(10, 8e9), 50e9, 10), 6);

    {
        VirtualBufferSet a(std::vector<double>{4.0});
        a.advance(std::vector<int>{2}, 5.0, 2.0);
        check("advance f=0", a.current(), 3.0);
        VirtualBufferSet b(std::vector<double>{1.0});
        b.advance(std::vector<int>{0}, 5.0, 2.0);
        check("advance clamp", b.current(), 0.0);
        VirtualBufferSet c(std::vector<double>{0.0, 2.0});
        c.advance(std::vector<int>{0, 3}, 5.0, 2.0);
        check("advance f=1", c.levels()[1], 8.0);
        VirtualBufferSet s(std::vector<double>{3.0, 8.0});
        s.apply_swipe(true);
        check("swipe f=0", s.levels()[0], 8.0);
        check("swipe f=1", s.levels()[1], 0.0);
        VirtualBufferSet d(std::vector<double>{3.0, 8.0, 5.0});
        d.apply_swipe(true);
        d.advance(std::vector<int>{0, 0, 0}, 0.0, 2.0);
        d.apply_swipe(true);
        check("double swipe f=0", d.levels()[0], 5.0);
        check("double swipe f=1", d.levels()[1], 0.0);
        check("double swipe f=2", d.levels()[2], 0.0);
        VirtualBufferSet t(std::vector<double>{0.0, 4.0});
        t.video_transition();
        check("transition", t.levels()[0], 4.0);
    }

    SmgLoad load;
    load.selected_mb = {2.5, 3.5};
    load.priorities = {2.0, 1.0};
    load.min_rate_bps = 20e6;
    check("tx delay", multicast_delay(load, 0.5), 0.6);
    check("tx empty", multicast_delay(SmgLoad{}, 0.5), 0.0);
    check("tx beta 0", multicast_delay(load, 0.0), std::numeric_limits<double>::infinity());
    check("service delay", service_delay(load, 0.5, kContext), 4.8);
    check("rebuffering", rebuffering(4.8, 3.0), 1.8);
    check("rebuffering clamp", rebuffering(1.0, 3.0), 0.0);
    check("quality 4 Mb", segment_qualities(std::vector<double>{4.0}, 2.0)[0], 0.8);
    check("quality 0", ssim_from_bitrate(0.0), 0.0);
    check("quality sum", video_quality(std::vector<double>{0.8, 0.8}), 1.6);
    check("variation", quality_variation(std::vector<double>{0.8, 0.8}, 0.5), 0.15);
    check("variation one", quality_variation(std::vector<double>{0.2}, 0.8), 0.6);
    check("smg qoe", smg_qoe(0.8, 1.8, 0.15, 0.3, 0.6), 0.17);
    const std::vector<std::vector<double>> phi{{3.0, 1.0}, {2.0}};
    const auto w = weighting(phi);
    check("weight 1", w[0], 2.0 / 3.0);
    check("weight 2", w[1], 1.0 / 3.0);
    check("weighted qoe", weighted_qoe(0.17, 2.0 / 3.0), 0.17 * 2.0 / 3.0);

    {
        BranchingNetwork net({1, {1}, 1, 2}, 0);
        net.set_parameters({0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 2.0, 0.0});
        const auto q = q_table(net, std::vector<double>{0.5});
        check("dueling a0", q(0, 0), 2.0);
        check("dueling a1", q(1, 0), 0.0);
        Eigen::MatrixXd online(2, 2), target(2, 2);
        online << 0.9, 0.1, 0.2, 0.8;
        target << 2.0, 5.0, 7.0, 1.0;
        check("td target", td_target(1.0, online, target, 0.9, false), 2.35);
        check("td terminal", td_target(1.0, online, target, 0.9, true), 1.0);
        check("loss", transition_loss(2.0, std::vector<double>{1.5, 2.5}), 0.25);
        check("priority", transition_priority(2.0, std::vector<double>{1.5, 2.5}), 1.0);
        check("priority floor", transition_priority(2.0, std::vector<double>{2.0, 2.0}), 1e-6);
    }

    // Path enumeration on random catalogs of at most 8 segments.
    const auto start = Clock::now();
    Rng rng(2024);
    int catalogs = 0;
    double worst = 0.0;
    for (; catalogs < 300; ++catalogs) {
        const auto catalog = oracle::random_catalog(rng, 8);
        const auto dist = compute_distribution(catalog, {0, 0});
        for (const auto &[id, wp] : oracle::enumerate_watch(catalog, {0, 0})) worst = std::max(worst, std::abs(dist.at(id) - wp));
    }
    const double elapsed = seconds_since(start);

    Outcome out;
    out.pass = check.misses.empty() && worst <= 1e-9 && elapsed < 1.0;
    out.detail = fmt::format("{} worked values, {} mismatches; {} catalogs enumerated, max error {:.2e}, {:.3f} s",
                             check.checked, check.misses.size(), catalogs, worst, elapsed);
    for (const auto &m : check.misses) out.detail += "; " + m;
    return out;
}

std::vector<double> random_share(Rng &rng, std::size_t n, double beta_min) {
    std::vector<double> e(n);
    double total = exponential(rng);
    for (auto &x : e) total += (x = exponential(rng));
    for (auto &x : e) x = beta_min + (1.0 - static_cast<double>(n) * beta_min) * x / total;
    return e;
}

Outcome convexity() {
    Rng rng(31);
    const auto start = Clock::now();
    int failures = 0;
    for (int probe = 0; probe < 1000; ++probe) {
        const int G = 1 + static_cast<int>(uniform_index(rng, 4));
        const auto loads = oracle::random_loads(rng, G, true);
        const auto objective = TransformedObjective::from_loads(loads, kContext);
        const auto a = random_share(rng, static_cast<std::size_t>(G), 1e-4);
        const auto b = random_share(rng, static_cast<std::size_t>(G), 1e-4);
        if (!convexity_probe(objective, a, b, uniform01(rng), 1e-9)) ++failures;
    }
    const double elapsed = seconds_since(start);
    return {failures == 0 && elapsed < 5.0, fmt::format("1000 probes, {} failures, {:.3f} s", failures, elapsed)};
}

Outcome optimizer_equivalence() {
    Rng rng(37);
    std::vector<double> times;
    int misses = 0;
    double worst = -1.0;
    for (int trial = 0; trial < 500; ++trial) {
        const int G = 2 + static_cast<int>(uniform_index(rng, 2));
        const auto loads = oracle::random_loads(rng, G);
        const auto objective = TransformedObjective::from_loads(loads, kContext);
        const auto start = Clock::now();
        const auto result = slsqp_optimize(objective, initial_split(objective, 1e-4));
        times.push_back(seconds_since(start));
        const double grid = oracle::grid_optimum(objective, 1e-4, 1e-3);
        worst = std::max(worst, result.objective - grid);
        if (result.objective > grid + 1e-3) ++misses;
    }
    const double median_ms = summarize(times).median * 1e3;
    return {misses == 0 && median_ms < 50.0,
            fmt::format("500 instances, {} beyond 1e-3 of the grid (worst gap {:.2e}), median solve {:.3f} ms", misses,
                        worst, median_ms)};
}

Outcome finite_differences() {
    Rng rng(41);
    double worst_sub = 0.0;
    int probes = 0;
    while (probes < 500) {
        const int G = 1 + static_cast<int>(uniform_index(rng, 3));
        const auto objective = TransformedObjective::from_loads(oracle::random_loads(rng, G), kContext);
        const auto beta = random_share(rng, static_cast<std::size_t>(G), 1e-2);
        const auto grad = objective.subgradient(beta);
        for (std::size_t g = 0; g < beta.size(); ++g) {
            const double kink = objective.terms()[g].kink();
            if (std::abs(beta[g] - kink) < 1e-3 * beta[g]) continue;  // away from kinks
            auto f = [&](double x) {
                auto b = beta;
                b[g] = x;
                return objective.value(b);
            };
            const double numeric = oracle::central_difference(f, beta[g], 1e-6 * beta[g]);
            if (std::abs(grad[g]) < 1e-9 && std::abs(numeric) < 1e-9) continue;
            worst_sub = std::max(worst_sub, oracle::relative_error(grad[g], numeric));
            ++probes;
        }
    }

    BranchingNetwork net({4, {8, 6}, 3, 3}, 17);
    auto params = net.parameters();
    for (auto &p : params) p += uniform(rng, -0.1, 0.1);
    net.set_parameters(params);
    Eigen::MatrixXd states(4, 5);
    for (Eigen::Index c = 0; c < states.cols(); ++c)
        for (Eigen::Index r = 0; r < states.rows(); ++r) states(r, c) = uniform(rng, -1.0, 1.0);
    const std::vector<std::vector<int>> actions{{0, 2, 1}, {1, 1, 0}, {2, 0, 2}, {0, 0, 0}, {1, 2, 1}};
    const std::vector<double> targets{0.5, -0.3, 1.2, 0.0, 0.7};
    net.zero_grad();
    (void)accumulate_loss(net, states, actions, targets);
    const auto analytic = net.gradients();
    double worst_net = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto f = [&](double x) {
            auto p = params;
            p[i] = x;
            BranchingNetwork probe = net;
            probe.set_parameters(p);
            probe.zero_grad();
            return accumulate_loss(probe, states, actions, targets).loss;
        };
        const double numeric = oracle::central_difference(f, params[i], 1e-6);
        if (std::abs(analytic[i]) < 1e-9 && std::abs(numeric) < 1e-9) continue;
        worst_net = std::max(worst_net, oracle::relative_error(analytic[i], numeric));
    }
    return {worst_sub <= 1e-4 && worst_net <= 1e-4,
            fmt::format("subgradient worst rel. error {:.2e} over {} components; {} network parameters worst {:.2e}",
                        worst_sub, probes, params.size(), worst_net)};
}

Outcome value_identity() {
    BranchingNetwork net({9, {64, 32}, 6, 3}, 3);
    Rng rng(43);
    Eigen::MatrixXd states(9, 100);
    for (Eigen::Index c = 0; c < states.cols(); ++c)
        for (Eigen::Index r = 0; r < states.rows(); ++r) states(r, c) = uniform(rng, -3.0, 3.0);
    const Eigen::MatrixXd q = net.forward(states);
    const auto &v = net.last_value();
    double worst = 0.0;
    for (Eigen::Index c = 0; c < q.cols(); ++c)
        for (int b = 0; b < 6; ++b) worst = std::max(worst, std::abs(q.col(c).segment(b * 3, 3).mean() - v(c)));
    return {worst <= 1e-6, fmt::format("100 states, 6 branches, max |mean Q - V| = {:.2e}", worst)};
}

double mean_reward(const std::vector<EpisodeLog> &logs) {
    double sum = 0.0;
    for (const auto &l : logs) sum += l.mean_reward;
    return logs.empty() ? 0.0 : sum / static_cast<double>(logs.size());
}

Outcome learning_sanity(const fs::path &config) {
    const auto scenario = load_scenario(config);
    const auto start = Clock::now();
    const auto trained = train_agent(scenario, Scheme::proposed, scenario.agent);
    const double elapsed = seconds_since(start);
    const auto &curve = trained.curve;
    const std::size_t tenth = std::max<std::size_t>(1, curve.size() / 10);
    double first = 0.0, last = 0.0;
    for (std::size_t i = 0; i < tenth; ++i) {
        first += curve[i].mean_reward / static_cast<double>(tenth);
        last += curve[curve.size() - 1 - i].mean_reward / static_cast<double>(tenth);
    }
    const double random = mean_reward(run_baseline(scenario, PolicyKind::random, 50, scenario.seed));
    const bool pass = last >= 1.05 * first && last >= 1.05 * random && elapsed <= 600.0;
    return {pass, fmt::format("{} episodes x {} steps: first 10% {:.4f}, last 10% {:.4f}, random {:.4f}, {:.1f} s",
                              curve.size(), scenario.agent.episode_length, first, last, random, elapsed)};
}

Outcome baseline_direction(const fs::path &config) {
    const auto scenario = load_scenario(config);
    constexpr int kSeeds = 10;
    constexpr int kSweepSeeds = 5;
    constexpr int kEvalEpisodes = 10;
    constexpr std::uint64_t kEvalSeed = 9000;
    const auto start = Clock::now();

    std::vector<BranchingNetwork> proposed_nets;
    int wins = 0;
    double proposed_sum = 0.0, wdt_sum = 0.0;
    for (int s = 0; s < kSeeds; ++s) {
        auto agent_config = scenario.agent;
        agent_config.seed = scenario.agent.seed + static_cast<std::uint64_t>(s);
        const auto proposed = train_agent(scenario, Scheme::proposed, agent_config);
        const auto wdt = train_agent(scenario, Scheme::wdt, agent_config);
        const double p = mean_reward(run_baseline(scenario, PolicyKind::proposed, kEvalEpisodes, kEvalSeed, &proposed.agent.online()));
        const double w = mean_reward(run_baseline(scenario, PolicyKind::wdt, kEvalEpisodes, kEvalSeed, &wdt.agent.online()));
        if (p >= w) ++wins;
        proposed_sum += p;
        wdt_sum += w;
        if (s < kSweepSeeds) proposed_nets.push_back(proposed.agent.online());
    }
    const double p_value = sign_test_p(wins, kSeeds);

    // Reuse the first agents and move one resource at a time.
    auto sweep = [&](const std::vector<double> &levels, double SystemResources::*field) {
        std::vector<double> xs, ys;
        for (const auto &net : proposed_nets) {
            for (double x : levels) {
                auto varied = scenario;
                varied.resources.*field = x;
                xs.push_back(x);
                ys.push_back(mean_reward(run_baseline(varied, PolicyKind::proposed, kEvalEpisodes, kEvalSeed, &net)));
            }
        }
        return spearman(xs, ys);
    };
    const double rho_bandwidth = sweep({6e6, 8e6, 10e6, 12e6, 14e6}, &SystemResources::bandwidth_hz);
    const double rho_computing = sweep({8e9, 9e9, 10e9, 11e9, 12e9}, &SystemResources::computing_hz);

    const bool pass = p_value < 0.05 && rho_bandwidth > 0.0 && rho_computing > 0.0;
    return {pass, fmt::format("proposed >= wdt on {}/{} seeds (mean {:.4f} vs {:.4f}, sign test p = {:.4f}); "
                              "spearman bandwidth {:.3f}, computing {:.3f}; {:.1f} s",
                              wins, kSeeds, proposed_sum / kSeeds, wdt_sum / kSeeds, p_value, rho_bandwidth,
                              rho_computing, seconds_since(start))};
}

#ifdef MCAST_HAVE_CLI
int run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "mcast");
    std::vector<char *> argv;
    for (auto &a : args) argv.push_back(a.data());
    return cli::run(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path &p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome determinism(const fs::path &config_dir) {
    const fs::path root = fs::current_path() / "acceptance_determinism";
    fs::remove_all(root);
    const auto tiny = (config_dir / "tiny.json").string();
    const auto high = (config_dir / "high_swipe.json").string();
    using Command = std::vector<std::string>;
    const std::vector<std::pair<std::string, Command>> commands{
        {"simulate_random", {"simulate", "--config", tiny, "--policy", "random", "--seed", "7", "--episodes", "3"}},
        {"simulate_heuristic", {"simulate", "--config", high, "--policy", "heuristic", "--seed", "3", "--episodes", "2"}},
        {"train", {"train", "--config", tiny, "--episodes", "6", "--seed", "5"}},
        {"train_trials", {"train", "--config", high, "--policy", "wdt", "--episodes", "3", "--trials", "2"}},
    };
    int compared = 0;
    std::vector<std::string> differing;
    auto run_twice = [&](const std::string &name, Command command) {
        for (const char *copy : {"a", "b"}) {
            auto args = command;
            args.push_back("--out");
            args.push_back((root / copy / name).string());
            if (run_cli(args) != 0) differing.push_back(name + " (exit code)");
        }
        for (const auto &entry : fs::recursive_directory_iterator(root / "a" / name)) {
            const auto ext = entry.path().extension();
            if (ext != ".jsonl" && ext != ".csv" && ext != ".bin") continue;
            const auto rel = fs::relative(entry.path(), root / "a");
            ++compared;
            if (slurp(entry.path()) != slurp(root / "b" / rel)) differing.push_back(rel.string());
        }
    };
    for (const auto &[name, command] : commands) run_twice(name, command);
    run_twice("evaluate", {"evaluate", "--config", tiny, "--checkpoint", (root / "a" / "train" / "checkpoint.bin").string(),
                           "--sqp-trace", "--episodes", "2"});
    fs::remove_all(root);
    Outcome out{differing.empty() && compared > 0,
                fmt::format("{} output files compared across repeated runs, {} differ", compared, differing.size())};
    for (const auto &d : differing) out.detail += "; " + d;
    return out;
}
#endif

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"mcast acceptance run"};
    std::string config_dir = "configs";
    std::string only;
    app.add_option("--config-dir", config_dir, "Directory holding the shipped scenarios")->check(CLI::ExistingDirectory);
    app.add_option("--only", only, "Run only criteria whose name contains this text");
    CLI11_PARSE(app, argc, argv);
    const fs::path dir(config_dir);

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"formula oracles", formula_oracles},
        {"objective convexity", convexity},
        {"optimizer equivalence", optimizer_equivalence},
        {"subgradient and backprop", finite_differences},
        {"dueling value identity", value_identity},
        {"learning sanity", [&] { return learning_sanity(dir / "tiny.json"); }},
        {"baseline direction", [&] { return baseline_direction(dir / "high_swipe.json"); }},
#ifdef MCAST_HAVE_CLI
        {"determinism", [&] { return determinism(dir); }},
#else
        {"determinism", [] { return Outcome{false, "built without the command-line tool"}; }},
#endif
    };

    int failed = 0, ran = 0;
    for (const auto &[name, check] : criteria) {
        if (name.find(only) == std::string::npos) continue;
        ++ran;
        Outcome outcome;
        try {
            outcome = check();
        } catch (const std::exception &e) {
            outcome = {false, fmt::format("threw: {}", e.what())};
        }
        if (!outcome.pass) ++failed;
        fmt::print("{} {}: {}\n", outcome.pass ? "PASS" : "FAIL", name, outcome.detail);
        std::fflush(stdout);
    }
    fmt::print("{}/{} criteria passed\n", ran - failed, ran);
    return failed == 0 ? 0 : 1;
}
