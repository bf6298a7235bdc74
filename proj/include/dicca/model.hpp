#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dicca/dataset.hpp"
#include "dicca/matrix.hpp"
#include "dicca/network.hpp"

namespace dicca {
class Rng;
}

namespace dicca::model {

// How the shared encoder sees the views: concatenated features, or their
// elementwise sum (only valid when every view has the same width).
enum class Fusion { concat, sum };

// "appendix": one nonlinearity on the raw input followed by an affine map
//   private mean  = affine(relu(x_m)),  private std = head(affine(softplus(x_m)))
//   shared mean   = affine(x),          shared std  = head(affine(x))
// "mlp": affine -> relu blocks with the configured hidden widths, then affine.
enum class EncoderArch { appendix, mlp };

// Generator f_m applied to the gated latent input of width h_m.
//   appendix: affine(tanh(h))    linear: affine(h)
//   identity: h (requires h_m == d_m)    mlp: affine/relu blocks then affine
enum class DecoderArch { appendix, linear, identity, mlp };

// Positive map on the std head of every encoder.
enum class StdHead { exp, softplus };

std::string_view to_string(Fusion v);
std::string_view to_string(EncoderArch v);
std::string_view to_string(DecoderArch v);
std::string_view to_string(StdHead v);
Fusion fusion_from_string(std::string_view s);
EncoderArch encoder_arch_from_string(std::string_view s);
DecoderArch decoder_arch_from_string(std::string_view s);
StdHead std_head_from_string(std::string_view s);

struct DiccaConfig {
    std::vector<std::size_t> dims;            // d_m
    std::size_t k_shared = 10;                // K
    std::vector<std::size_t> k_private;       // K_m
    std::vector<std::size_t> gen_input_dims;  // h_m; empty means h_m = d_m
    double lambda = 1.0;
    std::size_t mc_samples = 1;
    bool disable_private = false;  // shared-only ablation: no Z^m, no W^m
    Fusion fusion = Fusion::concat;
    EncoderArch encoder = EncoderArch::appendix;
    std::vector<std::size_t> encoder_hidden;
    DecoderArch decoder = DecoderArch::appendix;
    std::vector<std::size_t> decoder_hidden;
    StdHead std_head = StdHead::exp;

    std::size_t views() const noexcept { return dims.size(); }
    std::size_t private_dim(std::size_t m) const noexcept { return disable_private ? 0 : k_private[m]; }
    std::size_t gen_input_dim(std::size_t m) const noexcept {
        return gen_input_dims.empty() ? dims[m] : gen_input_dims[m];
    }
    std::size_t fused_width() const noexcept;

    // Throws InvalidConfig naming the offending field.
    void validate() const;

    friend bool operator==(const DiccaConfig&, const DiccaConfig&) = default;
};

struct Encoder {
    nn::Network mean;
    nn::Network std;
    friend bool operator==(const Encoder&, const Encoder&) = default;
};

enum class ParamGroup { latent_to_group, generator, noise, encoder };

// All trainable state. Gradients use the same type.
//
// Parameter order (optimiser state and the model file follow it):
//   for each view m: lambda/m, w/m, generator/m/<layer params>, log_psi/m
//   encoder/shared/mean, encoder/shared/std
//   for each view m: encoder/private/m/mean, encoder/private/m/std
struct DiccaParams {
    std::vector<Matrix> lambda_mats;  // h_m x K
    std::vector<Matrix> w_mats;       // h_m x K_m
    std::vector<nn::Network> generators;
    std::vector<Vector> log_psi;      // per-feature log noise variance
    Encoder shared_encoder;
    std::vector<Encoder> private_encoders;

    template <class F>
    void for_each_block(F&& f);
    template <class F>
    void for_each_block(F&& f) const;

    std::size_t param_count() const;

    friend bool operator==(const DiccaParams&, const DiccaParams&) = default;
};

// Correctly shaped parameters, all zero.
DiccaParams make_params(const DiccaConfig& config);
// Fan-scaled uniform weights (networks, lambda and W), zero biases, log_psi = 0.
DiccaParams init_params(const DiccaConfig& config, std::uint64_t seed);
DiccaParams zeros_like(const DiccaParams& p);
void axpy(DiccaParams& y, double a, const DiccaParams& x);

// Diagonal Gaussian per row.
struct GaussianBatch {
    Matrix mean;
    Matrix std;
};

struct Encoded {
    GaussianBatch shared;
    std::vector<GaussianBatch> privates;  // empty with disable_private
};

Encoded encode(const DiccaConfig& config, const DiccaParams& params, std::span<const Matrix> views);

// mean + std * noise
Matrix reparam_sample(const GaussianBatch& post, const Matrix& noise);

// Per-view generator means for gated inputs z * lambda^T + z_m * W^T.
std::vector<Matrix> decode(const DiccaConfig& config, const DiccaParams& params, const Matrix& z,
                           std::span<const Matrix> z_privates);

// Posterior-mean reconstruction of every view.
std::vector<Matrix> reconstruct(const DiccaConfig& config, const DiccaParams& params,
                                std::span<const Matrix> views);

// Per-row diagonal Gaussian log density with variances exp(log_psi).
Vector gaussian_loglik(const Matrix& x, const Matrix& mean, std::span<const double> log_psi);

// Per-row KL(N(mean, std^2) || N(0, I)).
Vector kl_std_normal(const GaussianBatch& post);

// Total KL of the factorised posterior: shared + sum of private terms.
double kl_decomposition_check(double shared_kl, std::span<const double> private_kls);

// Standard-normal draws for one objective evaluation: shared[s] is B x K,
// privates[s][m] is B x K_m, for s < mc_samples.
struct ElboNoise {
    std::vector<Matrix> shared;
    std::vector<std::vector<Matrix>> privates;
};

ElboNoise draw_noise(const DiccaConfig& config, std::size_t batch, Rng& rng);

struct ElboParts {
    Vector reconstruction;   // per view, mean over rows (and MC draws) of log p(x^m | z, z^m)
    double kl_shared = 0.0;  // mean over rows
    Vector kl_private;       // per view, mean over rows
    double theta_prior = 0.0;      // (1/N) * 1/2 sum ||theta_m||^2
    double penalty_shared = 0.0;   // lambda * sum of lambda-column norms
    double penalty_private = 0.0;  // lambda * sum of W-column norms

    double total() const;
};

struct ElboResult {
    double value = 0.0;  // equals parts.total()
    ElboParts parts;
};

// Objective on a batch, per sample: reconstruction and KL terms are means over
// the rows, the generator prior is divided by `data_size` (the number of
// samples in the full dataset; 0 means the batch size), and the group-lasso
// terms use lambda as given. An encoder std that is zero or non-finite makes
// the value -inf rather than throwing.
struct ObjectiveOptions {
    double data_size = 0.0;
};

ElboResult elbo(const DiccaConfig& config, const DiccaParams& params, std::span<const Matrix> views,
                const ElboNoise& noise, const ObjectiveOptions& options = {});

struct ElboGradient {
    ElboResult result;
    DiccaParams grad;  // d value / d params (ascent direction)
};

// Exact gradient at fixed noise. The group-lasso terms are non-smooth; they
// are left out of the gradient unless include_penalty is set, in which case
// the gradient of lambda * ||column|| is added for every non-zero column.
ElboGradient elbo_gradient(const DiccaConfig& config, const DiccaParams& params, std::span<const Matrix> views,
                           const ElboNoise& noise, const ObjectiveOptions& options = {},
                           bool include_penalty = false);

// Generative sampling of a dataset. With sample_prior_weights, every column of
// lambda and W is redrawn from N(0, gamma^2 I), gamma^2 ~ Gamma((h_m + 1)/2,
// rate lambda^2 / 2), before generating.
MultiViewDataset sample_generative(const DiccaConfig& config, const DiccaParams& params, std::size_t n,
                                   std::uint64_t seed, bool sample_prior_weights);

struct SparsityPrior {
    double lambda = 0.0;
    double shape(std::size_t column_length) const noexcept { return 0.5 * (static_cast<double>(column_length) + 1.0); }
    double rate() const noexcept { return 0.5 * lambda * lambda; }
};

// ---------------------------------------------------------------------------

template <class F>
void DiccaParams::for_each_block(F&& f) {
    const std::size_t views = lambda_mats.size();
    for (std::size_t m = 0; m < views; ++m) {
        const std::string v = std::to_string(m);
        f("lambda/" + v, lambda_mats[m].values(), ParamGroup::latent_to_group);
        f("w/" + v, w_mats[m].values(), ParamGroup::latent_to_group);
        generators[m].for_each_param(
            [&](const std::string& name, std::span<double> p) { f("generator/" + v + "/" + name, p, ParamGroup::generator); });
        f("log_psi/" + v, std::span<double>(log_psi[m]), ParamGroup::noise);
    }
    auto enc = [&](const std::string& prefix, Encoder& e) {
        e.mean.for_each_param(
            [&](const std::string& name, std::span<double> p) { f(prefix + "/mean/" + name, p, ParamGroup::encoder); });
        e.std.for_each_param(
            [&](const std::string& name, std::span<double> p) { f(prefix + "/std/" + name, p, ParamGroup::encoder); });
    };
    enc("encoder/shared", shared_encoder);
    for (std::size_t m = 0; m < private_encoders.size(); ++m) enc("encoder/private/" + std::to_string(m), private_encoders[m]);
}

template <class F>
void DiccaParams::for_each_block(F&& f) const {
    const_cast<DiccaParams*>(this)->for_each_block(
        [&](const std::string& path, std::span<double> p, ParamGroup g) { f(path, std::span<const double>(p), g); });
}

}  // namespace dicca::model
