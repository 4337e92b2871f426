#include "mcast/policies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace mcast {

std::string_view to_string(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::proposed: return "proposed";
        case PolicyKind::wdt: return "wdt";
        case PolicyKind::heuristic: return "heuristic";
        case PolicyKind::random: return "random";
    }
    return "unknown";
}

std::optional<PolicyKind> parse_policy(std::string_view name) {
    for (auto kind : {PolicyKind::proposed, PolicyKind::wdt, PolicyKind::heuristic, PolicyKind::random})
        if (name == to_string(kind)) return kind;
    return std::nullopt;
}

Scheme scheme_for(PolicyKind kind) { return kind == PolicyKind::wdt ? Scheme::wdt : Scheme::proposed; }

AgentPolicy::AgentPolicy(BranchingNetwork net, SqpOptions sqp) : net_(std::move(net)), sqp_(sqp) {}

SchedulingDecision AgentPolicy::decide(const Environment &env) {
    const auto obs = env.observation();
    const auto q = q_table(net_, obs);
    std::vector<int> actions(static_cast<std::size_t>(q.cols()));
    for (Eigen::Index b = 0; b < q.cols(); ++b) actions[b] = greedy_action(q.col(b));
    return env.complete_decision(env.versions_from_actions(actions), sqp_);
}

RandomPolicy::RandomPolicy(std::uint64_t seed, SqpOptions sqp) : rng_(mix_seed(seed, 20)), sqp_(sqp) {}

SchedulingDecision RandomPolicy::decide(const Environment &env) {
    const auto L = static_cast<std::uint64_t>(env.action_count());
    std::vector<std::vector<int>> versions(env.plan().smgs.size());
    for (std::size_t g = 0; g < versions.size(); ++g)
        for (std::size_t m = 0; m < env.plan().smgs[g].size(); ++m)
            versions[g].push_back(1 + static_cast<int>(uniform_index(rng_, L)));
    return env.complete_decision(std::move(versions), sqp_);
}

std::pair<std::vector<int>, double> best_versions(const SmgLoad &base, std::span<const SegmentId> segments,
                                                  const VideoCatalog &catalog, double beta, double weight,
                                                  const QoeContext &ctx) {
    const std::size_t n = segments.size();
    if (n == 0) return {{}, 0.0};
    const int L = catalog.layer_count();
    SmgLoad load = base;
    load.selected_mb.assign(n, 0.0);
    std::vector<int> v(n, 1);
    std::vector<int> best;
    double best_value = -std::numeric_limits<double>::infinity();
    while (true) {
        for (std::size_t m = 0; m < n; ++m) load.selected_mb[m] = catalog.cumulative_mb(segments[m], v[m]);
        const auto quality = segment_qualities(load.selected_mb, ctx.segment_seconds);
        const double r = rebuffering(service_delay(load, beta, ctx), load.buffer_s);
        const double value = weighted_qoe(smg_qoe(video_quality(quality), r, quality_variation(quality, load.last_quality),
                                                  load.lambda_rebuffer, load.lambda_variation),
                                          weight);
        if (best.empty() || value > best_value) {
            best = v;
            best_value = value;
        }
        std::size_t m = 0;
        while (m < n && v[m] == L) v[m++] = 1;
        if (m == n) break;
        ++v[m];
    }
    return {best, best_value};
}

HeuristicPolicy::HeuristicPolicy(int mini_slots) : mini_slots_(mini_slots) {
    if (mini_slots < 1) throw std::invalid_argument("heuristic needs at least one mini-slot");
}

SchedulingDecision HeuristicPolicy::decide(const Environment &env) {
    const auto &plan = env.plan();
    const auto G = plan.smgs.size();
    std::vector<std::vector<int>> placeholder(G);
    for (std::size_t g = 0; g < G; ++g) placeholder[g].assign(plan.smgs[g].size(), 1);
    const auto base = env.loads(placeholder, BufferAccounting::current_video);
    const auto weights = weighting(base);
    const auto ctx = env.context();

    // best[g][k]: best versions and value with k mini-slots.
    std::vector<std::vector<std::pair<std::vector<int>, double>>> best(G);
    for (std::size_t g = 0; g < G; ++g) {
        std::vector<SegmentId> ids;
        for (const auto &seg : plan.smgs[g]) ids.push_back(seg.id);
        for (int k = 0; k <= mini_slots_; ++k)
            best[g].push_back(best_versions(base[g], ids, env.scenario().catalog,
                                            static_cast<double>(k) / mini_slots_, weights[g], ctx));
    }

    std::vector<int> share(G, 0);
    for (int slot = 0; slot < mini_slots_; ++slot) {
        std::size_t winner = G;
        double winner_gain = -std::numeric_limits<double>::infinity();
        for (std::size_t g = 0; g < G; ++g) {
            if (plan.smgs[g].empty()) continue;
            const double now = best[g][share[g]].second;
            const double next = best[g][share[g] + 1].second;
            const double gain = std::isinf(now) && now < 0.0 ? std::numeric_limits<double>::infinity() : next - now;
            if (winner == G || gain > winner_gain) {
                winner = g;
                winner_gain = gain;
            }
        }
        if (winner == G) break;
        ++share[winner];
    }

    SchedulingDecision decision;
    for (std::size_t g = 0; g < G; ++g) {
        decision.versions.push_back(best[g][share[g]].first);
        decision.slot_ratios.push_back(static_cast<double>(share[g]) / mini_slots_);
    }
    return decision;
}

std::unique_ptr<Policy> make_policy(PolicyKind kind, std::uint64_t seed, const BranchingNetwork *net) {
    switch (kind) {
        case PolicyKind::proposed:
        case PolicyKind::wdt:
            if (!net) throw std::invalid_argument("learned policies need a trained network");
            return std::make_unique<AgentPolicy>(*net);
        case PolicyKind::heuristic: return std::make_unique<HeuristicPolicy>();
        case PolicyKind::random: return std::make_unique<RandomPolicy>(seed);
    }
    throw std::invalid_argument("unknown policy");
}

EpisodeLog run_episode(Environment &env, Policy &policy, std::uint64_t seed) {
    EpisodeLog log;
    env.reset(seed);
    double sum = 0.0;
    while (!env.done()) {
        StepRecord record;
        record.slot = env.slot();
        record.decision = policy.decide(env);
        record.result = env.step(record.decision);
        sum += record.result.reward;
        log.steps.push_back(std::move(record));
    }
    log.mean_reward = log.steps.empty() ? 0.0 : sum / static_cast<double>(log.steps.size());
    return log;
}

std::vector<EpisodeLog> run_baseline(const Scenario &scenario, PolicyKind which, int episodes, std::uint64_t seed,
                                     const BranchingNetwork *net) {
    Environment env(scenario, scheme_for(which));
    auto policy = make_policy(which, seed, net);
    std::vector<EpisodeLog> out;
    for (int e = 0; e < episodes; ++e) out.push_back(run_episode(env, *policy, seed + static_cast<std::uint64_t>(e)));
    return out;
}

TrainingResult train_agent(const Scenario &scenario, Scheme scheme, const AgentConfig &config,
                           const std::function<void(const CurvePoint &)> &on_episode) {
    Environment env(scenario, scheme);
    env.set_horizon(config.episode_length);
    NetworkShape shape{static_cast<int>(env.observation_size()), config.hidden, env.branch_count(), env.action_count()};
    TrainingResult out{BdqnAgent(shape, config), {}};
    auto &agent = out.agent;

    for (int episode = 0; episode < config.episodes; ++episode) {
        const double epsilon = epsilon_after(config, episode);
        auto state = env.reset(mix_seed(config.seed, 1000 + static_cast<std::uint64_t>(episode)));
        double reward_sum = 0.0, loss_sum = 0.0;
        int steps = 0, losses = 0;
        while (!env.done()) {
            auto actions = agent.act(state, epsilon);
            const auto decision = env.complete_decision(env.versions_from_actions(actions));
            auto result = env.step(decision);
            reward_sum += result.reward;
            ++steps;
            Transition t{state, std::move(actions), result.estimated_reward, result.observation, result.terminal};
            state = std::move(result.observation);
            if (auto loss = agent.observe(std::move(t))) {
                loss_sum += *loss;
                ++losses;
            }
        }
        CurvePoint point{episode, reward_sum / steps, epsilon,
                         losses > 0 ? loss_sum / losses : std::numeric_limits<double>::quiet_NaN()};
        out.curve.push_back(point);
        if (on_episode) on_episode(point);
    }
    return out;
}

}  // namespace mcast
