#include "dicca/network.hpp"

#include <cmath>

#include "dicca/errors.hpp"
#include "dicca/kernels.hpp"
#include "dicca/random.hpp"

namespace dicca::nn {

std::string_view to_string(LayerKind kind) {
    switch (kind) {
        case LayerKind::affine: return "affine";
        case LayerKind::relu: return "relu";
        case LayerKind::softplus: return "softplus";
        case LayerKind::tanh: return "tanh";
        case LayerKind::exp: return "exp";
    }
    return "?";
}

LayerKind layer_kind_from_string(std::string_view name) {
    for (auto k : {LayerKind::affine, LayerKind::relu, LayerKind::softplus, LayerKind::tanh, LayerKind::exp})
        if (to_string(k) == name) return k;
    throw InvalidConfig("unknown layer kind '" + std::string(name) + "'");
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

Network& Network::add_affine(std::size_t out) {
    const std::size_t in = output_dim();
    layers_.push_back({LayerKind::affine, in, out, Matrix(in, out), Vector(out, 0.0)});
    return *this;
}

Network& Network::add(LayerKind kind) {
    if (kind == LayerKind::affine) throw InvalidConfig("use add_affine for affine layers");
    const std::size_t w = output_dim();
    layers_.push_back({kind, w, w, {}, {}});
    return *this;
}

std::size_t Network::output_dim() const noexcept {
    return layers_.empty() ? input_dim_ : layers_.back().out;
}

std::size_t Network::param_count() const noexcept {
    std::size_t n = 0;
    for (const auto& l : layers_)
        if (l.kind == LayerKind::affine) n += l.weight.size() + l.bias.size();
    return n;
}

Network Network::zeros_like() const {
    Network z = *this;
    z.for_each_param([](const std::string&, std::span<double> p) { std::fill(p.begin(), p.end(), 0.0); });
    return z;
}

void Network::init_uniform(Rng& rng) {
    for (auto& l : layers_) {
        if (l.kind != LayerKind::affine) continue;
        const double bound = std::sqrt(6.0 / static_cast<double>(l.in + l.out));
        for (double& w : l.weight.values()) w = rng.uniform(-bound, bound);
        std::fill(l.bias.begin(), l.bias.end(), 0.0);
    }
}

bool operator==(const Layer& a, const Layer& b) {
    return a.kind == b.kind && a.in == b.in && a.out == b.out && a.weight == b.weight && a.bias == b.bias;
}

bool operator==(const Network& a, const Network& b) {
    return a.input_dim_ == b.input_dim_ && a.layers_ == b.layers_;
}

namespace {

Matrix apply_layer(const Layer& l, const Matrix& x) {
    if (l.kind == LayerKind::affine) {
        Matrix y = kernels::matmul(x, l.weight);
        for (std::size_t r = 0; r < y.rows(); ++r) {
            auto row = y.row(r);
            for (std::size_t j = 0; j < l.out; ++j) row[j] += l.bias[j];
        }
        return y;
    }
    Matrix y = x;
    auto v = y.values();
    switch (l.kind) {
        case LayerKind::relu:
            for (double& e : v) e = e > 0.0 ? e : 0.0;
            break;
        case LayerKind::softplus:
            for (double& e : v) e = softplus(e);
            break;
        case LayerKind::tanh:
            for (double& e : v) e = std::tanh(e);
            break;
        case LayerKind::exp:
            for (double& e : v) e = std::exp(e);
            break;
        case LayerKind::affine:
            break;
    }
    return y;
}

void check_input(const Network& net, const Matrix& x) {
    if (x.cols() != net.input_dim())
        throw ShapeMismatch("network input has " + std::to_string(x.cols()) + " columns, expected " +
                            std::to_string(net.input_dim()));
}

}  // namespace

Forward forward(const Network& net, const Matrix& x) {
    check_input(net, x);
    Forward f;
    f.tape.activations.reserve(net.layers().size() + 1);
    f.tape.activations.push_back(x);
    for (const auto& l : net.layers()) f.tape.activations.push_back(apply_layer(l, f.tape.activations.back()));
    f.y = f.tape.activations.back();
    return f;
}

Matrix predict(const Network& net, const Matrix& x) {
    check_input(net, x);
    Matrix h = x;
    for (const auto& l : net.layers()) h = apply_layer(l, h);
    return h;
}

Backward backward(const Network& net, const Tape& tape, const Matrix& dy, bool input_grad) {
    const auto& layers = net.layers();
    const auto& acts = tape.activations;
    if (acts.size() != layers.size() + 1) throw InvalidTape("tape does not belong to this network");
    const std::size_t batch = acts.front().rows();
    for (std::size_t i = 0; i < acts.size(); ++i) {
        const std::size_t want = i == 0 ? net.input_dim() : layers[i - 1].out;
        if (acts[i].rows() != batch || acts[i].cols() != want) throw InvalidTape("tape shapes do not match network");
    }
    if (dy.rows() != batch || dy.cols() != net.output_dim())
        throw ShapeMismatch("backward: dy shape does not match the forward output");

    Backward b;
    b.grad = net.zeros_like();
    Matrix g = dy;
    for (std::size_t li = layers.size(); li-- > 0;) {
        const Layer& l = layers[li];
        const Matrix& x = acts[li];
        const Matrix& y = acts[li + 1];
        switch (l.kind) {
            case LayerKind::affine: {
                Layer& gl = b.grad.layers()[li];
                gl.weight = kernels::matmul_tn(x, g);
                for (std::size_t r = 0; r < g.rows(); ++r) {
                    const auto row = g.row(r);
                    for (std::size_t j = 0; j < l.out; ++j) gl.bias[j] += row[j];
                }
                if (li == 0 && !input_grad) return b;
                g = kernels::matmul_nt(g, l.weight);
                break;
            }
            case LayerKind::relu:
                for (std::size_t i = 0; i < g.size(); ++i)
                    if (!(x.data()[i] > 0.0)) g.data()[i] = 0.0;
                break;
            case LayerKind::softplus:
                for (std::size_t i = 0; i < g.size(); ++i) {
                    const double v = x.data()[i];
                    // logistic(v), written to avoid overflow for large |v|
                    const double s = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
                    g.data()[i] *= s;
                }
                break;
            case LayerKind::tanh:
                for (std::size_t i = 0; i < g.size(); ++i) {
                    const double t = y.data()[i];
                    g.data()[i] *= 1.0 - t * t;
                }
                break;
            case LayerKind::exp:
                for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] *= y.data()[i];
                break;
        }
    }
    b.dx = std::move(g);
    return b;
}

void axpy(Network& y, double a, const Network& x) {
    if (y.layers().size() != x.layers().size()) throw ShapeMismatch("axpy: network architectures differ");
    for (std::size_t i = 0; i < y.layers().size(); ++i) {
        Layer& ly = y.layers()[i];
        const Layer& lx = x.layers()[i];
        if (ly.kind != lx.kind || ly.in != lx.in || ly.out != lx.out)
            throw ShapeMismatch("axpy: network architectures differ");
        if (ly.kind != LayerKind::affine) continue;
        for (std::size_t k = 0; k < ly.weight.size(); ++k) ly.weight.data()[k] += a * lx.weight.data()[k];
        for (std::size_t k = 0; k < ly.bias.size(); ++k) ly.bias[k] += a * lx.bias[k];
    }
}

double param_l2(const Network& net) {
    double s = 0.0;
    net.for_each_param([&](const std::string&, std::span<const double> p) {
        for (double v : p) s += v * v;
    });
    return 0.5 * s;
}

}  // namespace dicca::nn
