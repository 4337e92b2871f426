#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mcast/rng.hpp"

namespace mcast {

struct NetworkShape {
    int inputs = 0;
    std::vector<int> hidden;  ///< ReLU trunk widths
    int branches = 0;
    int actions = 0;  ///< per branch

    bool operator==(const NetworkShape &) const = default;
};

/// Dueling network with a shared ReLU trunk, a scalar value head and one
/// advantage head per branch:
///   Q_b(s, a) = V(s) + A_b(s, a) - mean_a' A_b(s, a').
/// Batches are column-major: one state per column. Q rows are laid out
/// branch-major, row = b * actions + a.
class BranchingNetwork {
public:
    BranchingNetwork() = default;
    BranchingNetwork(NetworkShape shape, std::uint64_t seed);

    [[nodiscard]] const NetworkShape &shape() const { return shape_; }

    /// Q values; caches activations for the next backward().
    Eigen::MatrixXd forward(const Eigen::MatrixXd &states);
    /// Q values without touching the cache.
    [[nodiscard]] Eigen::MatrixXd evaluate(const Eigen::MatrixXd &states) const;
    /// Value-stream output of the last forward(), one entry per column.
    [[nodiscard]] const Eigen::RowVectorXd &last_value() const { return value_; }
    /// Raw advantages of the last forward().
    [[nodiscard]] const Eigen::MatrixXd &last_advantage() const { return advantage_; }

    /// Accumulates dLoss/dParameters given dLoss/dQ for the cached batch.
    void backward(const Eigen::MatrixXd &grad_q);
    void zero_grad();
    /// Plain gradient step after rescaling the gradient to at most `clip_norm`.
    /// Returns the pre-clipping gradient norm.
    double sgd_step(double learning_rate, double clip_norm);

    [[nodiscard]] std::size_t parameter_count() const;
    [[nodiscard]] std::vector<double> parameters() const;
    void set_parameters(const std::vector<double> &flat);
    [[nodiscard]] std::vector<double> gradients() const;

    void save(std::ostream &out) const;
    static BranchingNetwork load(std::istream &in);
    void save(const std::string &path) const;
    static BranchingNetwork load(const std::string &path);

private:
    struct Layer {
        Eigen::MatrixXd weight;  ///< out x in
        Eigen::VectorXd bias;
        Eigen::MatrixXd grad_weight;
        Eigen::VectorXd grad_bias;
    };

    static Layer make_layer(int in, int out, Rng &rng);
    Eigen::MatrixXd combine(const Eigen::RowVectorXd &value, const Eigen::MatrixXd &advantage) const;
    std::vector<Layer *> layers();
    std::vector<const Layer *> layers() const;

    NetworkShape shape_;
    std::vector<Layer> trunk_;
    Layer value_head_;
    Layer advantage_head_;

    std::vector<Eigen::MatrixXd> activations_;  ///< input followed by each trunk output
    Eigen::RowVectorXd value_;
    Eigen::MatrixXd advantage_;
};

}  // namespace mcast
