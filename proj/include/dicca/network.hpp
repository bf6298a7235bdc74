#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dicca/matrix.hpp"

namespace dicca {
class Rng;
}

namespace dicca::nn {

enum class LayerKind { affine, relu, softplus, tanh, exp };

std::string_view to_string(LayerKind kind);
LayerKind layer_kind_from_string(std::string_view name);

// Affine layers map a batch X (B x in) to X * weight + bias with weight
// stored in x out. The other kinds are elementwise and keep the width.
struct Layer {
    LayerKind kind = LayerKind::affine;
    std::size_t in = 0;
    std::size_t out = 0;
    Matrix weight;
    Vector bias;
};

// Feedforward stack. A network with no layers is the identity on its input
// width. Parameters are enumerated layer by layer, weight (row-major) before
// bias; optimiser state and the model file rely on that order.
class Network {
public:
    Network() = default;
    explicit Network(std::size_t input_dim) : input_dim_(input_dim) {}

    Network& add_affine(std::size_t out);
    Network& add(LayerKind kind);

    std::size_t input_dim() const noexcept { return input_dim_; }
    std::size_t output_dim() const noexcept;
    const std::vector<Layer>& layers() const noexcept { return layers_; }
    std::vector<Layer>& layers() noexcept { return layers_; }
    std::size_t param_count() const noexcept;

    // Same architecture, all parameters zero.
    Network zeros_like() const;

    // Weights ~ U(-sqrt(6/(in+out)), +sqrt(6/(in+out))), biases zero.
    void init_uniform(Rng& rng);

    template <class F>
    void for_each_param(F&& f) {
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            Layer& l = layers_[i];
            if (l.kind != LayerKind::affine) continue;
            f("layer" + std::to_string(i) + ".weight", l.weight.values());
            f("layer" + std::to_string(i) + ".bias", std::span<double>(l.bias));
        }
    }
    template <class F>
    void for_each_param(F&& f) const {
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            const Layer& l = layers_[i];
            if (l.kind != LayerKind::affine) continue;
            f("layer" + std::to_string(i) + ".weight", l.weight.values());
            f("layer" + std::to_string(i) + ".bias", std::span<const double>(l.bias));
        }
    }

    friend bool operator==(const Network&, const Network&);

private:
    std::size_t input_dim_ = 0;
    std::vector<Layer> layers_;
};

bool operator==(const Layer& a, const Layer& b);

// activations[0] is the input, activations[i + 1] the output of layer i.
struct Tape {
    std::vector<Matrix> activations;
};

struct Forward {
    Matrix y;
    Tape tape;
};

struct Backward {
    Matrix dx;
    Network grad;  // same architecture as the network, parameters hold gradients
};

Forward forward(const Network& net, const Matrix& x);
// Forward pass without keeping the tape.
Matrix predict(const Network& net, const Matrix& x);
// With input_grad = false, dx is left empty when the first layer is affine,
// which skips the most expensive product of an encoder's backward pass.
Backward backward(const Network& net, const Tape& tape, const Matrix& dy, bool input_grad = true);

// y += a * x over all parameters; the architectures must match.
void axpy(Network& y, double a, const Network& x);

// 1/2 * sum of squared affine parameters.
double param_l2(const Network& net);

// Overflow-safe softplus: max(x, 0) + log1p(exp(-|x|)).
double softplus(double x);

}  // namespace dicca::nn
