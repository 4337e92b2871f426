#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mcast/network.hpp"
#include "mcast/rng.hpp"

namespace mcast {

struct AgentConfig {
    std::vector<int> hidden{512, 256, 256, 128};
    int episodes = 500;
    int episode_length = 75;
    int batch_size = 64;
    double learning_rate = 1e-3;
    double discount = 0.9;
    double epsilon_start = 1.0;
    double epsilon_decay = 0.99;  ///< applied once per finished episode
    double epsilon_final = 0.1;
    int replay_capacity = 5000;
    int target_sync_steps = 200;
    double gradient_clip = 10.0;
    std::uint64_t seed = 1;
};

/// max(final, start * decay^k).
double epsilon_after(const AgentConfig &config, int decays);

struct Transition {
    std::vector<double> state;
    std::vector<int> actions;  ///< one action index per branch
    double reward = 0.0;
    std::vector<double> next_state;
    bool terminal = false;
};

/// Fixed-capacity FIFO store sampled proportionally to priority.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity);

    /// Returns the slot the transition landed in; overwrites the oldest when full.
    std::size_t push(Transition transition, double priority);
    /// Draws with replacement, P(slot) proportional to its priority.
    [[nodiscard]] std::vector<std::size_t> sample(Rng &rng, std::size_t count) const;
    void set_priority(std::size_t slot, double priority);

    [[nodiscard]] const Transition &at(std::size_t slot) const { return items_.at(slot); }
    [[nodiscard]] double priority(std::size_t slot) const { return priorities_.at(slot); }
    [[nodiscard]] std::size_t size() const { return items_.size(); }
    [[nodiscard]] std::size_t capacity() const { return capacity_; }
    /// Slot of the oldest stored transition.
    [[nodiscard]] std::size_t oldest() const { return items_.size() < capacity_ ? 0 : next_; }

private:
    std::size_t capacity_;
    std::size_t next_ = 0;
    std::vector<Transition> items_;
    std::vector<double> priorities_;
};

inline constexpr double kMinPriority = 1e-6;

/// Q values of one state as an (actions x branches) matrix.
Eigen::MatrixXd q_table(const BranchingNetwork &net, std::span<const double> state);

/// Index of the largest entry; ties go to the lowest index.
int greedy_action(const Eigen::Ref<const Eigen::VectorXd> &q);

/// Per branch: greedy with probability 1 - epsilon, uniform otherwise.
std::vector<int> select_actions(const Eigen::MatrixXd &q, double epsilon, Rng &rng);

/// y = r + discount * mean_b Q'_b(s', argmax_a Q_b(s', a)); y = r for terminal s'.
/// Both tables are (actions x branches): `online` picks, `target` evaluates.
double td_target(double reward, const Eigen::MatrixXd &online_next, const Eigen::MatrixXd &target_next,
                 double discount, bool terminal);

/// (1/B) sum_b (y - q_b)^2 over the taken actions of one transition.
double transition_loss(double target, std::span<const double> q_taken);
/// sum_b |y - q_b|, floored at kMinPriority.
double transition_priority(double target, std::span<const double> q_taken);

struct BatchLoss {
    double loss = 0.0;
    std::vector<double> priorities;
};

/// Batch-mean transition loss. Runs forward and accumulates parameter
/// gradients with backward(); the caller zeroes gradients beforehand.
BatchLoss accumulate_loss(BranchingNetwork &net, const Eigen::MatrixXd &states,
                          std::span<const std::vector<int>> actions, std::span<const double> targets);

/// Online network, frozen target copy, prioritized replay and the update rule.
class BdqnAgent {
public:
    BdqnAgent(NetworkShape shape, AgentConfig config);
    BdqnAgent(BranchingNetwork trained, AgentConfig config);

    std::vector<int> act(std::span<const double> state, double epsilon);
    /// Stores the transition at its current TD priority, takes one gradient
    /// step once the replay holds a batch, and syncs the target every
    /// target_sync_steps calls. Returns the batch loss when a step was taken.
    /// Throws std::runtime_error on a non-finite loss.
    std::optional<double> observe(Transition transition);

    [[nodiscard]] const BranchingNetwork &online() const { return online_; }
    [[nodiscard]] const BranchingNetwork &target() const { return target_; }
    [[nodiscard]] const ReplayBuffer &replay() const { return replay_; }
    [[nodiscard]] const AgentConfig &config() const { return config_; }
    [[nodiscard]] long steps() const { return steps_; }

private:
    double target_for(const Transition &t) const;
    std::optional<double> learn();

    AgentConfig config_;
    BranchingNetwork online_;
    BranchingNetwork target_;
    ReplayBuffer replay_;
    Rng explore_rng_;
    Rng sample_rng_;
    long steps_ = 0;
};

}  // namespace mcast
