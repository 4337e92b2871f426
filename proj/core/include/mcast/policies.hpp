#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "mcast/bdqn.hpp"
#include "mcast/environment.hpp"

namespace mcast {

enum class PolicyKind { proposed, wdt, heuristic, random };

std::string_view to_string(PolicyKind kind);
std::optional<PolicyKind> parse_policy(std::string_view name);
/// proposed and wdt run their own buffering scheme; the rest use the proposed one.
Scheme scheme_for(PolicyKind kind);

class Policy {
public:
    virtual ~Policy() = default;
    virtual SchedulingDecision decide(const Environment &env) = 0;
};

/// Greedy BDQN version selection followed by SQP slot division.
class AgentPolicy : public Policy {
public:
    AgentPolicy(BranchingNetwork net, SqpOptions sqp = {});
    SchedulingDecision decide(const Environment &env) override;

private:
    BranchingNetwork net_;
    SqpOptions sqp_;
};

/// Uniform random versions, SQP slot division.
class RandomPolicy : public Policy {
public:
    explicit RandomPolicy(std::uint64_t seed, SqpOptions sqp = {});
    SchedulingDecision decide(const Environment &env) override;

private:
    Rng rng_;
    SqpOptions sqp_;
};

/// Mini-slot greedy: the slot is cut into equal mini-slots and each one goes
/// to the SMG whose best weighted QoE (exhaustive over versions) gains most
/// from it.
class HeuristicPolicy : public Policy {
public:
    explicit HeuristicPolicy(int mini_slots = 10);
    SchedulingDecision decide(const Environment &env) override;

private:
    int mini_slots_;
};

/// Best version assignment for one SMG at slot share beta, by enumerating all
/// L^|Omega| combinations. Returns the versions and omega_g * Upsilon_g.
std::pair<std::vector<int>, double> best_versions(const SmgLoad &base, std::span<const SegmentId> segments,
                                                  const VideoCatalog &catalog, double beta, double weight,
                                                  const QoeContext &ctx);

std::unique_ptr<Policy> make_policy(PolicyKind kind, std::uint64_t seed, const BranchingNetwork *net);

struct StepRecord {
    int slot = 0;
    SchedulingDecision decision;
    StepResult result;
};

struct EpisodeLog {
    std::vector<StepRecord> steps;
    double mean_reward = 0.0;
};

EpisodeLog run_episode(Environment &env, Policy &policy, std::uint64_t seed);

/// Episodes of one baseline policy with seeds seed, seed+1, ...
std::vector<EpisodeLog> run_baseline(const Scenario &scenario, PolicyKind which, int episodes, std::uint64_t seed,
                                     const BranchingNetwork *net = nullptr);

struct CurvePoint {
    int episode = 0;
    double mean_reward = 0.0;
    double epsilon = 0.0;
    double loss = 0.0;  ///< mean batch loss over the episode; NaN before the replay fills
};

struct TrainingResult {
    BdqnAgent agent;
    std::vector<CurvePoint> curve;
};

/// Algorithm: epsilon-greedy versions, SQP slot division, environment step,
/// replay, gradient step, periodic target sync; epsilon decays per episode.
/// The agent learns from the scheme's own reward estimate.
TrainingResult train_agent(const Scenario &scenario, Scheme scheme, const AgentConfig &config,
                           const std::function<void(const CurvePoint &)> &on_episode = {});

}  // namespace mcast
