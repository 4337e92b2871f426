#include "mcast/bdqn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace mcast {

double epsilon_after(const AgentConfig &config, int decays) {
    return std::max(config.epsilon_final, config.epsilon_start * std::pow(config.epsilon_decay, decays));
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("replay capacity must be positive");
    items_.reserve(capacity);
    priorities_.reserve(capacity);
}

std::size_t ReplayBuffer::push(Transition transition, double priority) {
    priority = std::max(priority, kMinPriority);
    if (items_.size() < capacity_) {
        items_.push_back(std::move(transition));
        priorities_.push_back(priority);
        return items_.size() - 1;
    }
    const std::size_t slot = next_;
    items_[slot] = std::move(transition);
    priorities_[slot] = priority;
    next_ = (next_ + 1) % capacity_;
    return slot;
}

std::vector<std::size_t> ReplayBuffer::sample(Rng &rng, std::size_t count) const {
    if (items_.empty()) throw std::logic_error("cannot sample an empty replay buffer");
    std::vector<double> cumulative(priorities_.size());
    double running = 0.0;
    for (std::size_t i = 0; i < priorities_.size(); ++i) cumulative[i] = running += priorities_[i];
    std::vector<std::size_t> picks(count);
    for (auto &pick : picks) {
        const double u = uniform01(rng) * running;
        const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
        pick = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), items_.size() - 1);
    }
    return picks;
}

void ReplayBuffer::set_priority(std::size_t slot, double priority) {
    priorities_.at(slot) = std::max(priority, kMinPriority);
}

Eigen::MatrixXd q_table(const BranchingNetwork &net, std::span<const double> state) {
    const Eigen::Map<const Eigen::VectorXd> s(state.data(), static_cast<Eigen::Index>(state.size()));
    const Eigen::VectorXd q = net.evaluate(s);
    return Eigen::Map<const Eigen::MatrixXd>(q.data(), net.shape().actions, net.shape().branches);
}

int greedy_action(const Eigen::Ref<const Eigen::VectorXd> &q) {
    int best = 0;
    for (Eigen::Index a = 1; a < q.size(); ++a)
        if (q(a) > q(best)) best = static_cast<int>(a);
    return best;
}

std::vector<int> select_actions(const Eigen::MatrixXd &q, double epsilon, Rng &rng) {
    std::vector<int> actions(q.cols());
    for (Eigen::Index b = 0; b < q.cols(); ++b) {
        if (epsilon > 0.0 && uniform01(rng) < epsilon)
            actions[b] = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(q.rows())));
        else
            actions[b] = greedy_action(q.col(b));
    }
    return actions;
}

double td_target(double reward, const Eigen::MatrixXd &online_next, const Eigen::MatrixXd &target_next,
                 double discount, bool terminal) {
    if (terminal || discount == 0.0) return reward;
    double sum = 0.0;
    for (Eigen::Index b = 0; b < online_next.cols(); ++b) sum += target_next(greedy_action(online_next.col(b)), b);
    return reward + discount * sum / static_cast<double>(online_next.cols());
}

double transition_loss(double target, std::span<const double> q_taken) {
    double sum = 0.0;
    for (double q : q_taken) sum += (target - q) * (target - q);
    return sum / static_cast<double>(q_taken.size());
}

double transition_priority(double target, std::span<const double> q_taken) {
    double sum = 0.0;
    for (double q : q_taken) sum += std::abs(target - q);
    return std::max(sum, kMinPriority);
}

BatchLoss accumulate_loss(BranchingNetwork &net, const Eigen::MatrixXd &states,
                          std::span<const std::vector<int>> actions, std::span<const double> targets) {
    const auto batch = static_cast<std::size_t>(states.cols());
    if (batch == 0 || actions.size() != batch || targets.size() != batch)
        throw std::invalid_argument("loss batch is empty or inconsistent");
    const int branches = net.shape().branches;
    const int n = net.shape().actions;
    const Eigen::MatrixXd q = net.forward(states);

    BatchLoss out;
    out.priorities.resize(batch);
    Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(q.rows(), q.cols());
    std::vector<double> taken(branches);
    const double scale = 1.0 / (static_cast<double>(batch) * branches);
    for (std::size_t i = 0; i < batch; ++i) {
        if (actions[i].size() != static_cast<std::size_t>(branches))
            throw std::invalid_argument("transition has the wrong number of branch actions");
        const auto col = static_cast<Eigen::Index>(i);
        for (int b = 0; b < branches; ++b) {
            const int row = b * n + actions[i][b];
            taken[b] = q(row, col);
            grad(row, col) = -2.0 * (targets[i] - taken[b]) * scale;
        }
        out.loss += transition_loss(targets[i], taken);
        out.priorities[i] = transition_priority(targets[i], taken);
    }
    out.loss /= static_cast<double>(batch);
    net.backward(grad);
    return out;
}

BdqnAgent::BdqnAgent(NetworkShape shape, AgentConfig config)
    : BdqnAgent(BranchingNetwork(std::move(shape), mix_seed(config.seed, 0)), config) {}

BdqnAgent::BdqnAgent(BranchingNetwork trained, AgentConfig config)
    : config_(std::move(config)),
      online_(std::move(trained)),
      target_(online_),
      replay_(static_cast<std::size_t>(config_.replay_capacity)),
      explore_rng_(mix_seed(config_.seed, 1)),
      sample_rng_(mix_seed(config_.seed, 2)) {}

std::vector<int> BdqnAgent::act(std::span<const double> state, double epsilon) {
    return select_actions(q_table(online_, state), epsilon, explore_rng_);
}

double BdqnAgent::target_for(const Transition &t) const {
    if (t.terminal) return t.reward;
    return td_target(t.reward, q_table(online_, t.next_state), q_table(target_, t.next_state), config_.discount, false);
}

std::optional<double> BdqnAgent::observe(Transition transition) {
    const double y = target_for(transition);
    const auto q = q_table(online_, transition.state);
    std::vector<double> taken(transition.actions.size());
    for (std::size_t b = 0; b < taken.size(); ++b) taken[b] = q(transition.actions[b], static_cast<Eigen::Index>(b));
    replay_.push(std::move(transition), transition_priority(y, taken));

    ++steps_;
    auto loss = learn();
    if (config_.target_sync_steps > 0 && steps_ % config_.target_sync_steps == 0) target_ = online_;
    return loss;
}

std::optional<double> BdqnAgent::learn() {
    if (replay_.size() < static_cast<std::size_t>(config_.batch_size)) return std::nullopt;
    const auto picks = replay_.sample(sample_rng_, static_cast<std::size_t>(config_.batch_size));
    const auto dim = static_cast<Eigen::Index>(online_.shape().inputs);
    const auto batch = static_cast<Eigen::Index>(picks.size());

    Eigen::MatrixXd states(dim, batch), next(dim, batch);
    std::vector<std::vector<int>> actions(picks.size());
    for (Eigen::Index i = 0; i < batch; ++i) {
        const auto &t = replay_.at(picks[i]);
        states.col(i) = Eigen::Map<const Eigen::VectorXd>(t.state.data(), dim);
        next.col(i) = Eigen::Map<const Eigen::VectorXd>(t.next_state.data(), dim);
        actions[i] = t.actions;
    }

    const int n = online_.shape().actions;
    const int branches = online_.shape().branches;
    const Eigen::MatrixXd q_online = online_.evaluate(next);
    const Eigen::MatrixXd q_target = target_.evaluate(next);
    std::vector<double> targets(picks.size());
    for (Eigen::Index i = 0; i < batch; ++i) {
        const auto &t = replay_.at(picks[i]);
        targets[i] = td_target(t.reward, Eigen::Map<const Eigen::MatrixXd>(q_online.col(i).data(), n, branches),
                               Eigen::Map<const Eigen::MatrixXd>(q_target.col(i).data(), n, branches),
                               config_.discount, t.terminal);
    }

    online_.zero_grad();
    const auto result = accumulate_loss(online_, states, actions, targets);
    if (!std::isfinite(result.loss))
        throw std::runtime_error(fmt::format("non-finite training loss after {} steps", steps_));
    online_.sgd_step(config_.learning_rate, config_.gradient_clip);
    for (std::size_t i = 0; i < picks.size(); ++i) replay_.set_priority(picks[i], result.priorities[i]);
    return result.loss;
}

}  // namespace mcast
