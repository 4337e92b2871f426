#include "mcast/network.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <utility>

#include <fmt/format.h>

namespace mcast {

namespace {

constexpr std::array<char, 6> kMagic{'M', 'C', 'B', 'D', 'Q', 'N'};
constexpr std::uint32_t kFormatVersion = 1;

template <typename T>
void write_le(std::ostream &out, T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    std::array<char, sizeof(T)> bytes;
    std::memcpy(bytes.data(), &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    out.write(bytes.data(), sizeof(T));
}

template <typename T>
T read_le(std::istream &in) {
    std::array<char, sizeof(T)> bytes;
    if (!in.read(bytes.data(), sizeof(T))) throw std::runtime_error("checkpoint truncated");
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    T value;
    std::memcpy(&value, bytes.data(), sizeof(T));
    return value;
}

Eigen::MatrixXd relu(const Eigen::MatrixXd &x) { return x.cwiseMax(0.0); }

}  // namespace

BranchingNetwork::BranchingNetwork(NetworkShape shape, std::uint64_t seed) : shape_(std::move(shape)) {
    if (shape_.inputs <= 0 || shape_.branches <= 0 || shape_.actions <= 0 || shape_.hidden.empty())
        throw std::invalid_argument("network needs inputs, at least one hidden layer, branches and actions");
    for (int h : shape_.hidden)
        if (h <= 0) throw std::invalid_argument("hidden layer widths must be positive");
    Rng rng(seed);
    int in = shape_.inputs;
    for (int h : shape_.hidden) {
        trunk_.push_back(make_layer(in, h, rng));
        in = h;
    }
    value_head_ = make_layer(in, 1, rng);
    advantage_head_ = make_layer(in, shape_.branches * shape_.actions, rng);
}

BranchingNetwork::Layer BranchingNetwork::make_layer(int in, int out, Rng &rng) {
    Layer layer;
    const double limit = std::sqrt(6.0 / in);
    layer.weight.resize(out, in);
    for (int r = 0; r < out; ++r)
        for (int c = 0; c < in; ++c) layer.weight(r, c) = uniform(rng, -limit, limit);
    layer.bias = Eigen::VectorXd::Zero(out);
    layer.grad_weight = Eigen::MatrixXd::Zero(out, in);
    layer.grad_bias = Eigen::VectorXd::Zero(out);
    return layer;
}

Eigen::MatrixXd BranchingNetwork::combine(const Eigen::RowVectorXd &value, const Eigen::MatrixXd &advantage) const {
    const int n = shape_.actions;
    Eigen::MatrixXd q(advantage.rows(), advantage.cols());
    for (int b = 0; b < shape_.branches; ++b) {
        const auto block = advantage.middleRows(b * n, n);
        const Eigen::RowVectorXd shift = value - block.colwise().mean();
        q.middleRows(b * n, n) = block.rowwise() + shift;
    }
    return q;
}

Eigen::MatrixXd BranchingNetwork::forward(const Eigen::MatrixXd &states) {
    if (states.rows() != shape_.inputs)
        throw std::invalid_argument(fmt::format("state has {} features, network expects {}", states.rows(), shape_.inputs));
    activations_.clear();
    activations_.push_back(states);
    for (const auto &layer : trunk_) {
        Eigen::MatrixXd z = layer.weight * activations_.back();
        z.colwise() += layer.bias;
        activations_.push_back(relu(z));
    }
    const auto &top = activations_.back();
    value_ = (value_head_.weight * top).row(0).array() + value_head_.bias(0);
    advantage_ = advantage_head_.weight * top;
    advantage_.colwise() += advantage_head_.bias;
    return combine(value_, advantage_);
}

Eigen::MatrixXd BranchingNetwork::evaluate(const Eigen::MatrixXd &states) const {
    if (states.rows() != shape_.inputs)
        throw std::invalid_argument(fmt::format("state has {} features, network expects {}", states.rows(), shape_.inputs));
    Eigen::MatrixXd x = states;
    for (const auto &layer : trunk_) {
        Eigen::MatrixXd z = layer.weight * x;
        z.colwise() += layer.bias;
        x = relu(z);
    }
    Eigen::RowVectorXd value = (value_head_.weight * x).row(0).array() + value_head_.bias(0);
    Eigen::MatrixXd advantage = advantage_head_.weight * x;
    advantage.colwise() += advantage_head_.bias;
    return combine(value, advantage);
}

void BranchingNetwork::backward(const Eigen::MatrixXd &grad_q) {
    if (activations_.empty() || grad_q.cols() != activations_.front().cols() ||
        grad_q.rows() != static_cast<Eigen::Index>(shape_.branches) * shape_.actions)
        throw std::logic_error("backward() needs a matching forward() first");

    const int n = shape_.actions;
    const Eigen::RowVectorXd grad_value = grad_q.colwise().sum();
    Eigen::MatrixXd grad_adv(grad_q.rows(), grad_q.cols());
    for (int b = 0; b < shape_.branches; ++b) {
        const auto block = grad_q.middleRows(b * n, n);
        grad_adv.middleRows(b * n, n) = block.rowwise() - block.colwise().mean();
    }

    const auto &top = activations_.back();
    value_head_.grad_weight.noalias() += grad_value * top.transpose();
    value_head_.grad_bias(0) += grad_value.sum();
    advantage_head_.grad_weight.noalias() += grad_adv * top.transpose();
    advantage_head_.grad_bias += grad_adv.rowwise().sum();

    Eigen::MatrixXd grad = value_head_.weight.transpose() * grad_value + advantage_head_.weight.transpose() * grad_adv;
    for (std::size_t i = trunk_.size(); i-- > 0;) {
        const auto &out = activations_[i + 1];
        grad = grad.cwiseProduct((out.array() > 0.0).cast<double>().matrix());
        trunk_[i].grad_weight.noalias() += grad * activations_[i].transpose();
        trunk_[i].grad_bias += grad.rowwise().sum();
        if (i > 0) grad = trunk_[i].weight.transpose() * grad;
    }
}

void BranchingNetwork::zero_grad() {
    for (auto *layer : layers()) {
        layer->grad_weight.setZero();
        layer->grad_bias.setZero();
    }
}

double BranchingNetwork::sgd_step(double learning_rate, double clip_norm) {
    double squared = 0.0;
    for (const auto *layer : std::as_const(*this).layers())
        squared += layer->grad_weight.squaredNorm() + layer->grad_bias.squaredNorm();
    const double norm = std::sqrt(squared);
    const double scale = (clip_norm > 0.0 && norm > clip_norm) ? clip_norm / norm : 1.0;
    for (auto *layer : layers()) {
        layer->weight -= learning_rate * scale * layer->grad_weight;
        layer->bias -= learning_rate * scale * layer->grad_bias;
    }
    return norm;
}

std::vector<BranchingNetwork::Layer *> BranchingNetwork::layers() {
    std::vector<Layer *> out;
    for (auto &l : trunk_) out.push_back(&l);
    out.push_back(&value_head_);
    out.push_back(&advantage_head_);
    return out;
}

std::vector<const BranchingNetwork::Layer *> BranchingNetwork::layers() const {
    std::vector<const Layer *> out;
    for (const auto &l : trunk_) out.push_back(&l);
    out.push_back(&value_head_);
    out.push_back(&advantage_head_);
    return out;
}

std::size_t BranchingNetwork::parameter_count() const {
    std::size_t count = 0;
    for (const auto *layer : layers()) count += layer->weight.size() + layer->bias.size();
    return count;
}

// Flat order: per layer (trunk, value head, advantage head) the weights row by
// row, then the biases.
std::vector<double> BranchingNetwork::parameters() const {
    std::vector<double> flat;
    flat.reserve(parameter_count());
    for (const auto *layer : layers()) {
        for (Eigen::Index r = 0; r < layer->weight.rows(); ++r)
            for (Eigen::Index c = 0; c < layer->weight.cols(); ++c) flat.push_back(layer->weight(r, c));
        for (Eigen::Index r = 0; r < layer->bias.size(); ++r) flat.push_back(layer->bias(r));
    }
    return flat;
}

void BranchingNetwork::set_parameters(const std::vector<double> &flat) {
    if (flat.size() != parameter_count())
        throw std::invalid_argument(fmt::format("expected {} parameters, got {}", parameter_count(), flat.size()));
    std::size_t i = 0;
    for (auto *layer : layers()) {
        for (Eigen::Index r = 0; r < layer->weight.rows(); ++r)
            for (Eigen::Index c = 0; c < layer->weight.cols(); ++c) layer->weight(r, c) = flat[i++];
        for (Eigen::Index r = 0; r < layer->bias.size(); ++r) layer->bias(r) = flat[i++];
    }
}

std::vector<double> BranchingNetwork::gradients() const {
    std::vector<double> flat;
    flat.reserve(parameter_count());
    for (const auto *layer : layers()) {
        for (Eigen::Index r = 0; r < layer->grad_weight.rows(); ++r)
            for (Eigen::Index c = 0; c < layer->grad_weight.cols(); ++c) flat.push_back(layer->grad_weight(r, c));
        for (Eigen::Index r = 0; r < layer->grad_bias.size(); ++r) flat.push_back(layer->grad_bias(r));
    }
    return flat;
}

void BranchingNetwork::save(std::ostream &out) const {
    out.write(kMagic.data(), kMagic.size());
    write_le<std::uint32_t>(out, kFormatVersion);
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(shape_.inputs));
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(shape_.hidden.size()));
    for (int h : shape_.hidden) write_le<std::uint32_t>(out, static_cast<std::uint32_t>(h));
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(shape_.branches));
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(shape_.actions));
    const auto flat = parameters();
    write_le<std::uint64_t>(out, flat.size());
    for (double w : flat) write_le<double>(out, w);
    if (!out) throw std::runtime_error("failed to write checkpoint");
}

BranchingNetwork BranchingNetwork::load(std::istream &in) {
    std::array<char, 6> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != kMagic) throw std::runtime_error("not a BDQN checkpoint");
    const auto version = read_le<std::uint32_t>(in);
    if (version != kFormatVersion) throw std::runtime_error(fmt::format("unsupported checkpoint version {}", version));
    NetworkShape shape;
    shape.inputs = static_cast<int>(read_le<std::uint32_t>(in));
    const auto depth = read_le<std::uint32_t>(in);
    if (depth == 0 || depth > 64) throw std::runtime_error("corrupt checkpoint header");
    for (std::uint32_t i = 0; i < depth; ++i) shape.hidden.push_back(static_cast<int>(read_le<std::uint32_t>(in)));
    shape.branches = static_cast<int>(read_le<std::uint32_t>(in));
    shape.actions = static_cast<int>(read_le<std::uint32_t>(in));
    BranchingNetwork net(shape, 0);
    const auto count = read_le<std::uint64_t>(in);
    if (count != net.parameter_count()) throw std::runtime_error("checkpoint parameter count does not match its shape");
    std::vector<double> flat(count);
    for (auto &w : flat) w = read_le<double>(in);
    net.set_parameters(flat);
    return net;
}

void BranchingNetwork::save(const std::string &path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error(fmt::format("cannot write {}", path));
    save(out);
}

BranchingNetwork BranchingNetwork::load(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error(fmt::format("cannot read {}", path));
    return load(in);
}

}  // namespace mcast
