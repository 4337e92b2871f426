#include <doctest.h>

#include <cmath>
#include <sstream>

#include "mcast/bdqn.hpp"
#include "oracles.hpp"

using namespace mcast;

namespace {

// One input, one hidden unit, one branch of two actions; 8 parameters.
BranchingNetwork hand_set(double value, double a0, double a1) {
    BranchingNetwork net({1, {1}, 1, 2}, 0);
    // trunk w, b | value w, b | advantage w0, w1, b0, b1
    net.set_parameters({0.0, 0.0, 0.0, value, 0.0, 0.0, a0, a1});
    return net;
}

std::vector<double> random_state(Rng &rng, int n) {
    std::vector<double> s(static_cast<std::size_t>(n));
    for (auto &x : s) x = uniform(rng, -1.0, 1.0);
    return s;
}

Transition random_transition(Rng &rng, int inputs, int branches, int actions) {
    Transition t;
    t.state = random_state(rng, inputs);
    t.next_state = random_state(rng, inputs);
    for (int b = 0; b < branches; ++b) t.actions.push_back(static_cast<int>(uniform_index(rng, actions)));
    t.reward = uniform(rng, -1.0, 1.0);
    return t;
}

}  // namespace

TEST_CASE("dueling aggregation centres each branch's advantages") {
    const auto net = hand_set(1.0, 2.0, 0.0);
    const auto q = q_table(net, std::vector<double>{0.5});
    CHECK(std::abs(q(0, 0) - 2.0) <= 1e-12);
    CHECK(std::abs(q(1, 0) - 0.0) <= 1e-12);

    const auto flat = hand_set(0.7, 3.0, 3.0);
    const auto qf = q_table(flat, std::vector<double>{0.5});
    CHECK(std::abs(qf(0, 0) - 0.7) <= 1e-12);
    CHECK(std::abs(qf(1, 0) - 0.7) <= 1e-12);
}

TEST_CASE("per-branch mean Q equals the value stream") {
    BranchingNetwork net({6, {32, 16}, 5, 4}, 42);
    Rng rng(1);
    Eigen::MatrixXd states(6, 100);
    for (Eigen::Index c = 0; c < states.cols(); ++c)
        for (Eigen::Index r = 0; r < states.rows(); ++r) states(r, c) = uniform(rng, -2.0, 2.0);
    const Eigen::MatrixXd q = net.forward(states);
    const auto &v = net.last_value();
    for (Eigen::Index c = 0; c < q.cols(); ++c)
        for (int b = 0; b < 5; ++b) CHECK(std::abs(q.col(c).segment(b * 4, 4).mean() - v(c)) <= 1e-6);
    CHECK(q.isApprox(net.evaluate(states)));
}

TEST_CASE("greedy selection and exploration") {
    Rng rng(2);
    Eigen::MatrixXd q(3, 1);
    q << 0.1, 0.9, 0.3;
    CHECK(select_actions(q, 0.0, rng) == std::vector<int>{1});
    Eigen::MatrixXd tied = Eigen::MatrixXd::Constant(3, 2, 0.5);
    CHECK(select_actions(tied, 0.0, rng) == std::vector<int>{0, 0});

    // Uniform exploration: each of 4 actions within 3 sigma of 2500 in 10000 draws.
    Eigen::MatrixXd q4(4, 1);
    q4 << 5.0, 0.0, 0.0, 0.0;
    std::vector<int> counts(4, 0);
    for (int i = 0; i < 10000; ++i) ++counts[static_cast<std::size_t>(select_actions(q4, 1.0, rng)[0])];
    const double sigma = std::sqrt(10000 * 0.25 * 0.75);
    for (int c : counts) CHECK(std::abs(c - 2500.0) <= 3.0 * sigma);
}

TEST_CASE("greedy selection is a pure function of the state") {
    BranchingNetwork net({4, {8}, 3, 3}, 5);
    AgentConfig config;
    BdqnAgent agent(net, config);
    const std::vector<double> s{0.1, -0.4, 0.3, 0.9};
    const auto first = agent.act(s, 0.0);
    for (int i = 0; i < 20; ++i) CHECK(agent.act(s, 0.0) == first);
}

TEST_CASE("TD target averages the target network over branches") {
    Eigen::MatrixXd online(2, 2), target(2, 2);
    online << 0.9, 0.1, 0.2, 0.8;  // argmax: action 0 in branch 0, action 1 in branch 1
    target << 2.0, 5.0, 7.0, 1.0;
    CHECK(std::abs(td_target(1.0, online, target, 0.9, false) - 2.35) <= 1e-12);
    CHECK(td_target(1.0, online, target, 0.0, false) == 1.0);
    CHECK(td_target(1.0, online, target, 0.9, true) == 1.0);
}

TEST_CASE("branch loss and priority") {
    const std::vector<double> taken{1.5, 2.5};
    CHECK(std::abs(transition_loss(2.0, taken) - 0.25) <= 1e-12);
    CHECK(transition_loss(2.0, std::vector<double>{2.0, 2.0}) == 0.0);
    CHECK(std::abs(transition_priority(2.0, taken) - 1.0) <= 1e-12);
    CHECK(transition_priority(2.0, std::vector<double>{2.0, 2.0}) == kMinPriority);
}

TEST_CASE("loss gradients match central differences") {
    BranchingNetwork net({3, {6, 5}, 2, 3}, 9);
    Rng rng(3);
    auto params = net.parameters();
    for (auto &p : params) p += uniform(rng, -0.1, 0.1);  // nonzero biases too
    net.set_parameters(params);

    Eigen::MatrixXd states(3, 4);
    for (Eigen::Index c = 0; c < 4; ++c)
        for (Eigen::Index r = 0; r < 3; ++r) states(r, c) = uniform(rng, -1.0, 1.0);
    std::vector<std::vector<int>> actions{{0, 2}, {1, 1}, {2, 0}, {0, 0}};
    std::vector<double> targets{0.5, -0.3, 1.2, 0.0};

    net.zero_grad();
    (void)accumulate_loss(net, states, actions, targets);
    const auto analytic = net.gradients();

    double worst = 0.0;
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
        worst = std::max(worst, oracle::relative_error(analytic[i], numeric));
    }
    CHECK(worst <= 1e-4);
}

TEST_CASE("gradient clipping rescales the step") {
    BranchingNetwork net({2, {4}, 1, 2}, 1);
    const auto before = net.parameters();
    Eigen::MatrixXd s(2, 1);
    s << 1.0, -1.0;
    net.zero_grad();
    (void)accumulate_loss(net, s, std::vector<std::vector<int>>{{0}}, std::vector<double>{1000.0});
    const auto grad = net.gradients();
    const double norm = net.sgd_step(1.0, 10.0);
    double squared = 0.0;
    for (double g : grad) squared += g * g;
    CHECK(std::abs(norm - std::sqrt(squared)) <= 1e-9 * norm);
    REQUIRE(norm > 10.0);
    const auto after = net.parameters();
    double moved = 0.0;
    for (std::size_t i = 0; i < after.size(); ++i) moved += (after[i] - before[i]) * (after[i] - before[i]);
    CHECK(std::abs(std::sqrt(moved) - 10.0) <= 1e-9);
}

TEST_CASE("replay samples in proportion to priority") {
    ReplayBuffer replay(4);
    replay.push(Transition{}, 1.0);
    replay.push(Transition{}, 10.0);
    Rng rng(4);
    const auto picks = replay.sample(rng, 100000);
    int heavy = 0;
    for (auto p : picks) heavy += p == 1 ? 1 : 0;
    const double expected = 100000.0 * 10.0 / 11.0;
    const double sigma = std::sqrt(100000.0 * (10.0 / 11.0) * (1.0 / 11.0));
    CHECK(std::abs(heavy - expected) <= 4.0 * sigma);
    const double ratio = heavy / static_cast<double>(100000 - heavy);
    CHECK(ratio > 9.0);
    CHECK(ratio < 11.0);
}

TEST_CASE("replay evicts the oldest transition and never grows past capacity") {
    ReplayBuffer replay(3);
    for (int i = 0; i < 7; ++i) {
        Transition t;
        t.reward = i;
        replay.push(t, 0.0);
        CHECK(replay.size() <= 3);
    }
    // Rewards 4, 5, 6 survive; the next push overwrites reward 4.
    std::vector<double> kept;
    for (std::size_t s = 0; s < 3; ++s) kept.push_back(replay.at(s).reward);
    std::sort(kept.begin(), kept.end());
    CHECK(kept == std::vector<double>{4.0, 5.0, 6.0});
    CHECK(replay.at(replay.oldest()).reward == 4.0);
    CHECK(replay.priority(0) == kMinPriority);
    CHECK_THROWS_AS(ReplayBuffer(0), std::invalid_argument);
}

TEST_CASE("epsilon schedule") {
    const AgentConfig config;
    for (int k = 0; k < 400; ++k) CHECK(epsilon_after(config, k) == std::max(0.1, std::pow(0.99, k)));
    CHECK(epsilon_after(config, 0) == 1.0);
    CHECK(epsilon_after(config, 1000) == 0.1);
}

TEST_CASE("target network syncs on schedule and is frozen in between") {
    AgentConfig config;
    config.batch_size = 4;
    config.replay_capacity = 16;
    config.target_sync_steps = 5;
    config.learning_rate = 1e-2;
    BdqnAgent agent(NetworkShape{3, {8}, 2, 3}, config);
    Rng rng(6);
    const auto initial = agent.target().parameters();
    for (int step = 1; step <= 12; ++step) {
        const auto loss = agent.observe(random_transition(rng, 3, 2, 3));
        CHECK(loss.has_value() == (step >= 4));
        CHECK(agent.replay().size() <= 16);
        if (step % 5 == 0)
            CHECK(agent.target().parameters() == agent.online().parameters());
        else if (step < 5)
            CHECK(agent.target().parameters() == initial);
        else
            CHECK(agent.target().parameters() != agent.online().parameters());
    }
}

TEST_CASE("training is deterministic per seed") {
    auto run = [] {
        AgentConfig config;
        config.batch_size = 8;
        config.seed = 77;
        BdqnAgent agent(NetworkShape{4, {16, 8}, 3, 2}, config);
        Rng rng(8);
        std::vector<double> losses;
        for (int i = 0; i < 40; ++i) {
            auto t = random_transition(rng, 4, 3, 2);
            t.actions = agent.act(t.state, 0.5);
            if (auto l = agent.observe(t)) losses.push_back(*l);
        }
        return std::make_pair(losses, agent.online().parameters());
    };
    CHECK(run() == run());
}

TEST_CASE("checkpoints round-trip exactly") {
    BranchingNetwork net({5, {7, 3}, 4, 2}, 12);
    std::stringstream buffer;
    net.save(buffer);
    const std::string bytes = buffer.str();
    CHECK(bytes.substr(0, 6) == "MCBDQN");
    const auto restored = BranchingNetwork::load(buffer);
    CHECK(restored.shape() == net.shape());
    CHECK(restored.parameters() == net.parameters());
    // magic, version, inputs, depth, 2 widths, branches, actions, count, then doubles
    CHECK(bytes.size() == 6 + 4 * 7 + 8 + 8 * net.parameter_count());

    std::stringstream bad("NOTBDQN-----");
    CHECK_THROWS_AS(BranchingNetwork::load(bad), std::runtime_error);
    std::stringstream truncated(bytes.substr(0, bytes.size() - 3));
    CHECK_THROWS_AS(BranchingNetwork::load(truncated), std::runtime_error);
}
