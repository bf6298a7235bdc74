#include "dicca/optim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "dicca/errors.hpp"
#include "dicca/random.hpp"

namespace dicca::optim {

namespace {

constexpr std::uint64_t kShuffleTag = 0x5348;
constexpr std::uint64_t kNoiseTag = 0x4E4F;
constexpr std::uint64_t kInitTag = 0x494E;

void accumulate(model::ElboParts& acc, const model::ElboParts& p, double w) {
    if (acc.reconstruction.empty()) {
        acc.reconstruction.assign(p.reconstruction.size(), 0.0);
        acc.kl_private.assign(p.kl_private.size(), 0.0);
    }
    for (std::size_t m = 0; m < p.reconstruction.size(); ++m) acc.reconstruction[m] += w * p.reconstruction[m];
    for (std::size_t m = 0; m < p.kl_private.size(); ++m) acc.kl_private[m] += w * p.kl_private[m];
    acc.kl_shared += w * p.kl_shared;
    acc.theta_prior += w * p.theta_prior;
    acc.penalty_shared += w * p.penalty_shared;
    acc.penalty_private += w * p.penalty_private;
}

}  // namespace

Vector prox_group(std::span<const double> v, double threshold) {
    Vector out(v.begin(), v.end());
    if (threshold == 0.0) return out;
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm <= threshold) {
        std::fill(out.begin(), out.end(), 0.0);
        return out;
    }
    const double scale = (norm - threshold) / norm;
    for (double& x : out) x *= scale;
    return out;
}

std::size_t prox_columns(Matrix& a, double threshold) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
        const Vector col = prox_group(a.column(j), threshold);
        a.set_column(j, col);
    }
    return count_zero_columns(a);
}

std::size_t count_zero_columns(const Matrix& a) {
    std::size_t zeros = 0;
    for (std::size_t j = 0; j < a.cols(); ++j) {
        bool all_zero = true;
        for (std::size_t i = 0; i < a.rows() && all_zero; ++i) all_zero = a(i, j) == 0.0;
        zeros += all_zero ? 1 : 0;
    }
    return zeros;
}

void ProxConfig::validate() const {
    if (!(lr_w > 0.0) || !std::isfinite(lr_w)) throw InvalidConfig("lr_w must be finite and > 0");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidConfig("lambda must be finite and >= 0");
}

void AdamConfig::validate() const {
    if (!(lr > 0.0) || !std::isfinite(lr)) throw InvalidConfig("adam lr must be finite and > 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0)) throw InvalidConfig("adam beta1 must be in [0, 1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0)) throw InvalidConfig("adam beta2 must be in [0, 1)");
    if (!(eps > 0.0)) throw InvalidConfig("adam eps must be > 0");
}

AdamState::AdamState(AdamConfig config, std::vector<std::size_t> block_sizes) : config_(config) {
    config_.validate();
    for (std::size_t n : block_sizes) {
        m_.emplace_back(n, 0.0);
        v_.emplace_back(n, 0.0);
    }
}

void AdamState::update(std::span<const std::span<double>> params, std::span<const std::span<const double>> grads,
                       std::span<const std::string> paths) {
    if (params.size() != m_.size() || grads.size() != m_.size())
        throw ShapeMismatch("adam: parameter block count differs from optimiser state");
    for (std::size_t b = 0; b < grads.size(); ++b) {
        if (params[b].size() != m_[b].size() || grads[b].size() != m_[b].size())
            throw ShapeMismatch("adam: block " + std::to_string(b) + " changed size");
        for (double g : grads[b])
            if (!std::isfinite(g)) throw NonFiniteGradient(b < paths.size() ? paths[b] : "block " + std::to_string(b));
    }
    ++step_;
    const double t = static_cast<double>(step_);
    const double c1 = 1.0 - std::pow(config_.beta1, t);
    const double c2 = 1.0 - std::pow(config_.beta2, t);
    for (std::size_t b = 0; b < params.size(); ++b) {
        auto p = params[b];
        const auto g = grads[b];
        auto& m = m_[b];
        auto& v = v_[b];
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g[i];
            v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g[i] * g[i];
            const double mhat = m[i] / c1;
            const double vhat = v[i] / c2;
            p[i] -= config_.lr * mhat / (std::sqrt(vhat) + config_.eps);
        }
    }
}

double TrainReport::moving_average(std::size_t at, std::size_t window) const {
    if (at == 0 || at > epochs.size() || window == 0) throw InvalidIndex("moving_average: epoch out of range");
    const std::size_t first = at >= window ? at - window : 0;
    double s = 0.0;
    for (std::size_t e = first; e < at; ++e) s += epochs[e].elbo;
    return s / static_cast<double>(at - first);
}

TrainResult train(const MultiViewDataset& data, const model::DiccaConfig& config, const TrainOptions& options,
                  std::optional<model::DiccaParams> initial) {
    config.validate();
    options.prox.validate();
    options.adam.validate();
    if (options.prox.lambda != config.lambda) throw InvalidConfig("prox lambda differs from the model lambda");
    if (options.batch_size == 0) throw InvalidConfig("batch_size must be >= 1");
    data.validate();
    const std::size_t n = data.samples();
    if (n == 0) throw InvalidConfig("training data is empty");
    if (data.view_count() != config.views()) throw ShapeMismatch("dataset view count differs from the model");

    TrainResult result;
    result.params = initial ? std::move(*initial) : model::init_params(config, mix_seed(options.seed, {kInitTag}));
    model::DiccaParams& params = result.params;

    std::vector<std::size_t> adam_sizes;
    params.for_each_block([&](const std::string&, std::span<const double> b, model::ParamGroup g) {
        if (g != model::ParamGroup::latent_to_group) adam_sizes.push_back(b.size());
    });
    AdamState adam(options.adam, adam_sizes);
    const double step_w = options.prox.lr_w;
    const double threshold = options.prox.lr_w * config.lambda;
    const model::ObjectiveOptions objective{static_cast<double>(n)};

    auto zero_counts = [&](std::vector<std::size_t>& shared, std::vector<std::size_t>& priv) {
        shared.clear();
        priv.clear();
        for (std::size_t m = 0; m < config.views(); ++m) {
            shared.push_back(count_zero_columns(params.lambda_mats[m]));
            priv.push_back(count_zero_columns(params.w_mats[m]));
        }
    };

    for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        Rng shuffle_rng(mix_seed(options.seed, {kShuffleTag, epoch}));
        const auto order = permutation(n, shuffle_rng);

        EpochRecord rec;
        rec.epoch = epoch + 1;
        double elbo_sum = 0.0;
        const std::size_t batches = (n + options.batch_size - 1) / options.batch_size;
        for (std::size_t b = 0; b < batches; ++b) {
            const std::size_t lo = b * options.batch_size;
            const std::size_t hi = std::min(n, lo + options.batch_size);
            const std::span<const std::size_t> rows(order.data() + lo, hi - lo);
            std::vector<Matrix> views;
            views.reserve(config.views());
            for (const auto& v : data.views) views.push_back(take_rows(v, rows));

            Rng noise_rng(mix_seed(options.seed, {kNoiseTag, epoch, b}));
            const model::ElboNoise noise = model::draw_noise(config, rows.size(), noise_rng);
            model::ElboGradient g = model::elbo_gradient(config, params, views, noise, objective, false);
            if (!std::isfinite(g.result.value)) throw TrainingDiverged(epoch + 1, b);

            const double w = static_cast<double>(rows.size()) / static_cast<double>(n);
            elbo_sum += w * g.result.value;
            accumulate(rec.parts, g.result.parts, w);

            // Adam minimises, so it receives the negated ascent direction.
            std::vector<std::span<double>> p_blocks;
            std::vector<std::span<const double>> g_blocks;
            std::vector<std::string> paths;
            params.for_each_block([&](const std::string& path, std::span<double> blk, model::ParamGroup grp) {
                if (grp != model::ParamGroup::latent_to_group) {
                    p_blocks.push_back(blk);
                    paths.push_back(path);
                }
            });
            g.grad.for_each_block([&](const std::string&, std::span<double> blk, model::ParamGroup grp) {
                if (grp == model::ParamGroup::latent_to_group) return;
                for (double& x : blk) x = -x;
                g_blocks.push_back(blk);
            });
            adam.update(p_blocks, g_blocks, paths);

            for (std::size_t m = 0; m < config.views(); ++m) {
                for (auto [p, gr, name] : {std::tuple{&params.lambda_mats[m], &g.grad.lambda_mats[m], "lambda"},
                                           std::tuple{&params.w_mats[m], &g.grad.w_mats[m], "w"}}) {
                    if (!gr->all_finite()) throw NonFiniteGradient(std::string(name) + "/" + std::to_string(m));
                    for (std::size_t i = 0; i < p->size(); ++i) p->data()[i] += step_w * gr->data()[i];
                    prox_columns(*p, threshold);
                }
            }
            ++result.report.steps;
        }
        rec.elbo = elbo_sum;
        zero_counts(rec.zero_shared, rec.zero_private);
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (options.on_epoch) options.on_epoch(rec);
        result.report.epochs.push_back(std::move(rec));
    }
    zero_counts(result.report.final_zero_shared, result.report.final_zero_private);
    return result;
}

}  // namespace dicca::optim
