#include "dicca/model.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "dicca/errors.hpp"
#include "dicca/kernels.hpp"
#include "dicca/random.hpp"

namespace dicca::model {

namespace {

template <class E, std::size_t N>
E parse_enum(std::string_view s, const std::pair<E, std::string_view> (&table)[N], const char* what) {
    for (const auto& [e, name] : table)
        if (name == s) return e;
    throw InvalidConfig(std::string("unknown ") + what + " '" + std::string(s) + "'");
}

template <class E, std::size_t N>
std::string_view enum_name(E v, const std::pair<E, std::string_view> (&table)[N]) {
    for (const auto& [e, name] : table)
        if (e == v) return name;
    return "?";
}

constexpr std::pair<Fusion, std::string_view> kFusion[] = {{Fusion::concat, "concat"}, {Fusion::sum, "sum"}};
constexpr std::pair<EncoderArch, std::string_view> kEncoder[] = {{EncoderArch::appendix, "appendix"},
                                                                 {EncoderArch::mlp, "mlp"}};
constexpr std::pair<DecoderArch, std::string_view> kDecoder[] = {{DecoderArch::appendix, "appendix"},
                                                                 {DecoderArch::linear, "linear"},
                                                                 {DecoderArch::identity, "identity"},
                                                                 {DecoderArch::mlp, "mlp"}};
constexpr std::pair<StdHead, std::string_view> kHead[] = {{StdHead::exp, "exp"}, {StdHead::softplus, "softplus"}};

nn::LayerKind head_layer(StdHead h) { return h == StdHead::exp ? nn::LayerKind::exp : nn::LayerKind::softplus; }

Encoder build_encoder(const DiccaConfig& c, std::size_t in, std::size_t out, bool shared) {
    Encoder e{nn::Network(in), nn::Network(in)};
    if (c.encoder == EncoderArch::appendix) {
        if (!shared) {
            e.mean.add(nn::LayerKind::relu);
            e.std.add(nn::LayerKind::softplus);
        }
        e.mean.add_affine(out);
        e.std.add_affine(out);
    } else {
        for (auto* net : {&e.mean, &e.std}) {
            for (std::size_t w : c.encoder_hidden) net->add_affine(w).add(nn::LayerKind::relu);
            net->add_affine(out);
        }
    }
    e.std.add(head_layer(c.std_head));
    return e;
}

nn::Network build_generator(const DiccaConfig& c, std::size_t m) {
    nn::Network g(c.gen_input_dim(m));
    switch (c.decoder) {
        case DecoderArch::appendix: g.add(nn::LayerKind::tanh).add_affine(c.dims[m]); break;
        case DecoderArch::linear: g.add_affine(c.dims[m]); break;
        case DecoderArch::identity: break;
        case DecoderArch::mlp:
            for (std::size_t w : c.decoder_hidden) g.add_affine(w).add(nn::LayerKind::relu);
            g.add_affine(c.dims[m]);
            break;
    }
    return g;
}

Matrix fuse(const DiccaConfig& c, std::span<const Matrix> views) {
    if (c.fusion == Fusion::concat) return hconcat(views);
    Matrix s = views.front();
    for (std::size_t m = 1; m < views.size(); ++m) s += views[m];
    return s;
}

void check_views(const DiccaConfig& c, std::span<const Matrix> views) {
    if (views.size() != c.views())
        throw ShapeMismatch("expected " + std::to_string(c.views()) + " views, got " + std::to_string(views.size()));
    for (std::size_t m = 0; m < views.size(); ++m) {
        if (views[m].cols() != c.dims[m])
            throw ShapeMismatch("view " + std::to_string(m) + " has " + std::to_string(views[m].cols()) +
                                " features, model expects " + std::to_string(c.dims[m]));
        if (views[m].rows() != views.front().rows()) throw ShapeMismatch("views differ in batch size");
    }
}

bool all_positive(const Matrix& std) {
    for (double v : std.values())
        if (!(v > 0.0) || !std::isfinite(v)) return false;
    return true;
}

void check_positive(const Matrix& std, const char* what) {
    for (double v : std.values())
        if (!(v > 0.0) || !std::isfinite(v)) throw Error(std::string(what) + ": std head produced a non-positive value");
}

// z * lambda^T + z_m * W^T
Matrix gated_input(const Matrix& z, const Matrix& lambda, const Matrix* zp, const Matrix& w) {
    Matrix h = kernels::matmul_nt(z, lambda);
    if (zp && w.cols() > 0) h += kernels::matmul_nt(*zp, w);
    return h;
}

double group_norm_sum(const Matrix& a) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) s += column_norm(a, j);
    return s;
}

void add_group_gradient(Matrix& grad, const Matrix& a, double lambda) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
        const double norm = column_norm(a, j);
        if (norm == 0.0) continue;
        for (std::size_t i = 0; i < a.rows(); ++i) grad(i, j) -= lambda * a(i, j) / norm;
    }
}

struct EncoderPass {
    nn::Forward mean;
    nn::Forward std;
};

ElboGradient evaluate(const DiccaConfig& cfg, const DiccaParams& params, std::span<const Matrix> views,
                      const ElboNoise& noise, const ObjectiveOptions& options, bool want_grad,
                      bool include_penalty) {
    check_views(cfg, views);
    const std::size_t views_n = cfg.views();
    const std::size_t batch = views.front().rows();
    if (batch == 0) throw ShapeMismatch("empty batch");
    const std::size_t mc = cfg.mc_samples;
    if (noise.shared.size() != mc || noise.privates.size() != mc)
        throw ShapeMismatch("noise does not hold mc_samples draws");
    const double inv_b = 1.0 / static_cast<double>(batch);
    const double inv_bs = inv_b / static_cast<double>(mc);
    const double data_size = options.data_size > 0.0 ? options.data_size : static_cast<double>(batch);

    // Encoders
    const Matrix fused = fuse(cfg, views);
    EncoderPass shared{nn::forward(params.shared_encoder.mean, fused), nn::forward(params.shared_encoder.std, fused)};
    bool degenerate = !all_positive(shared.std.y);
    std::vector<EncoderPass> priv;
    if (!cfg.disable_private) {
        priv.reserve(views_n);
        for (std::size_t m = 0; m < views_n; ++m) {
            priv.push_back({nn::forward(params.private_encoders[m].mean, views[m]),
                            nn::forward(params.private_encoders[m].std, views[m])});
            degenerate = degenerate || !all_positive(priv.back().std.y);
        }
    }

    ElboGradient out;
    ElboParts& parts = out.result.parts;
    parts.reconstruction.assign(views_n, 0.0);
    parts.kl_private.assign(views_n, 0.0);
    if (degenerate) {
        // A collapsed or overflowing std head puts the KL at +inf; the caller
        // sees a non-finite objective instead of an exception.
        parts.kl_shared = std::numeric_limits<double>::infinity();
        out.result.value = parts.total();
        if (want_grad) out.grad = zeros_like(params);
        return out;
    }

    const Matrix& mu = shared.mean.y;
    const Matrix& sd = shared.std.y;
    Matrix d_mu, d_sd;
    std::vector<Matrix> d_mu_p, d_sd_p;
    if (want_grad) {
        out.grad = zeros_like(params);
        d_mu = Matrix(mu.rows(), mu.cols());
        d_sd = Matrix(sd.rows(), sd.cols());
        for (const auto& p : priv) {
            d_mu_p.emplace_back(p.mean.y.rows(), p.mean.y.cols());
            d_sd_p.emplace_back(p.std.y.rows(), p.std.y.cols());
        }
    }

    for (std::size_t s = 0; s < mc; ++s) {
        const Matrix& eps = noise.shared[s];
        if (eps.rows() != batch || eps.cols() != cfg.k_shared) throw ShapeMismatch("shared noise shape");
        const Matrix z = reparam_sample({mu, sd}, eps);
        std::vector<Matrix> zp;
        for (std::size_t m = 0; m < priv.size(); ++m) {
            const Matrix& e = noise.privates[s].at(m);
            if (e.rows() != batch || e.cols() != cfg.private_dim(m)) throw ShapeMismatch("private noise shape");
            zp.push_back(reparam_sample({priv[m].mean.y, priv[m].std.y}, e));
        }

        Matrix d_z = want_grad ? Matrix(batch, cfg.k_shared) : Matrix();
        std::vector<Matrix> d_zp;
        if (want_grad)
            for (std::size_t m = 0; m < priv.size(); ++m) d_zp.emplace_back(batch, cfg.private_dim(m));

        for (std::size_t m = 0; m < views_n; ++m) {
            const Matrix* zpm = priv.empty() ? nullptr : &zp[m];
            const Matrix h = gated_input(z, params.lambda_mats[m], zpm, params.w_mats[m]);
            const nn::Forward gen = nn::forward(params.generators[m], h);
            const Matrix& mean = gen.y;
            const Matrix& x = views[m];
            const auto& lp = params.log_psi[m];
            const Vector ll = gaussian_loglik(x, mean, lp);
            double sum_ll = 0.0;
            for (double v : ll) sum_ll += v;
            parts.reconstruction[m] += sum_ll * inv_bs;

            if (!want_grad) continue;
            const std::size_t d = cfg.dims[m];
            Matrix d_mean(batch, d);
            Vector& g_lp = out.grad.log_psi[m];
            for (std::size_t n = 0; n < batch; ++n) {
                for (std::size_t j = 0; j < d; ++j) {
                    const double inv_psi = std::exp(-lp[j]);
                    const double r = x(n, j) - mean(n, j);
                    d_mean(n, j) = r * inv_psi * inv_bs;
                    g_lp[j] += (-0.5 + 0.5 * r * r * inv_psi) * inv_bs;
                }
            }
            const nn::Backward gb = nn::backward(params.generators[m], gen.tape, d_mean);
            nn::axpy(out.grad.generators[m], 1.0, gb.grad);
            const Matrix& d_h = gb.dx;
            out.grad.lambda_mats[m] += kernels::matmul_tn(d_h, z);
            d_z += kernels::matmul(d_h, params.lambda_mats[m]);
            if (zpm && params.w_mats[m].cols() > 0) {
                out.grad.w_mats[m] += kernels::matmul_tn(d_h, *zpm);
                d_zp[m] += kernels::matmul(d_h, params.w_mats[m]);
            }
        }

        if (want_grad) {
            d_mu += d_z;
            for (std::size_t i = 0; i < d_z.size(); ++i) d_sd.data()[i] += d_z.data()[i] * eps.data()[i];
            for (std::size_t m = 0; m < priv.size(); ++m) {
                const Matrix& e = noise.privates[s][m];
                d_mu_p[m] += d_zp[m];
                for (std::size_t i = 0; i < d_zp[m].size(); ++i) d_sd_p[m].data()[i] += d_zp[m].data()[i] * e.data()[i];
            }
        }
    }

    // KL terms and their gradients
    auto kl_term = [&](const Matrix& m_, const Matrix& s_, Matrix* gm, Matrix* gs) {
        const Vector kl = kl_std_normal({m_, s_});
        double total = 0.0;
        for (double v : kl) total += v;
        if (gm) {
            for (std::size_t i = 0; i < m_.size(); ++i) {
                const double mv = m_.data()[i], sv = s_.data()[i];
                gm->data()[i] -= mv * inv_b;
                gs->data()[i] -= (sv - 1.0 / sv) * inv_b;
            }
        }
        return total * inv_b;
    };
    parts.kl_shared = kl_term(mu, sd, want_grad ? &d_mu : nullptr, want_grad ? &d_sd : nullptr);
    for (std::size_t m = 0; m < priv.size(); ++m)
        parts.kl_private[m] = kl_term(priv[m].mean.y, priv[m].std.y, want_grad ? &d_mu_p[m] : nullptr,
                                      want_grad ? &d_sd_p[m] : nullptr);

    // Generator prior and group-lasso terms
    double l2 = 0.0;
    for (const auto& g : params.generators) l2 += nn::param_l2(g);
    parts.theta_prior = l2 / data_size;
    for (std::size_t m = 0; m < views_n; ++m) {
        parts.penalty_shared += cfg.lambda * group_norm_sum(params.lambda_mats[m]);
        parts.penalty_private += cfg.lambda * group_norm_sum(params.w_mats[m]);
    }
    out.result.value = parts.total();

    if (want_grad) {
        for (std::size_t m = 0; m < views_n; ++m) {
            nn::axpy(out.grad.generators[m], -1.0 / data_size, params.generators[m]);
            if (include_penalty) {
                add_group_gradient(out.grad.lambda_mats[m], params.lambda_mats[m], cfg.lambda);
                add_group_gradient(out.grad.w_mats[m], params.w_mats[m], cfg.lambda);
            }
        }
        auto enc_back = [](const Encoder& e, const EncoderPass& pass, const Matrix& gm, const Matrix& gs, Encoder& ge) {
            nn::axpy(ge.mean, 1.0, nn::backward(e.mean, pass.mean.tape, gm, false).grad);
            nn::axpy(ge.std, 1.0, nn::backward(e.std, pass.std.tape, gs, false).grad);
        };
        enc_back(params.shared_encoder, shared, d_mu, d_sd, out.grad.shared_encoder);
        for (std::size_t m = 0; m < priv.size(); ++m)
            enc_back(params.private_encoders[m], priv[m], d_mu_p[m], d_sd_p[m], out.grad.private_encoders[m]);
    }
    return out;
}

}  // namespace

std::string_view to_string(Fusion v) { return enum_name(v, kFusion); }
std::string_view to_string(EncoderArch v) { return enum_name(v, kEncoder); }
std::string_view to_string(DecoderArch v) { return enum_name(v, kDecoder); }
std::string_view to_string(StdHead v) { return enum_name(v, kHead); }
Fusion fusion_from_string(std::string_view s) { return parse_enum(s, kFusion, "fusion"); }
EncoderArch encoder_arch_from_string(std::string_view s) { return parse_enum(s, kEncoder, "encoder architecture"); }
DecoderArch decoder_arch_from_string(std::string_view s) { return parse_enum(s, kDecoder, "decoder architecture"); }
StdHead std_head_from_string(std::string_view s) { return parse_enum(s, kHead, "std head"); }

std::size_t DiccaConfig::fused_width() const noexcept {
    if (fusion == Fusion::sum) return dims.empty() ? 0 : dims.front();
    std::size_t w = 0;
    for (std::size_t d : dims) w += d;
    return w;
}

void DiccaConfig::validate() const {
    const std::size_t m = dims.size();
    if (m == 0) throw InvalidConfig("dims: at least one view is required");
    for (std::size_t i = 0; i < m; ++i)
        if (dims[i] == 0) throw InvalidConfig("dims[" + std::to_string(i) + "] must be >= 1");
    if (k_shared == 0) throw InvalidConfig("k_shared must be >= 1");
    if (k_private.size() != m) throw InvalidConfig("k_private must list one size per view");
    if (!disable_private)
        for (std::size_t i = 0; i < m; ++i)
            if (k_private[i] == 0) throw InvalidConfig("k_private[" + std::to_string(i) + "] must be >= 1");
    if (!gen_input_dims.empty()) {
        if (gen_input_dims.size() != m) throw InvalidConfig("gen_input_dims must list one width per view");
        for (std::size_t i = 0; i < m; ++i)
            if (gen_input_dims[i] == 0) throw InvalidConfig("gen_input_dims[" + std::to_string(i) + "] must be >= 1");
    }
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidConfig("lambda must be finite and >= 0");
    if (mc_samples == 0) throw InvalidConfig("mc_samples must be >= 1");
    if (fusion == Fusion::sum)
        for (std::size_t i = 1; i < m; ++i)
            if (dims[i] != dims[0]) throw InvalidConfig("fusion 'sum' requires equal view widths");
    if (decoder == DecoderArch::identity)
        for (std::size_t i = 0; i < m; ++i)
            if (gen_input_dim(i) != dims[i])
                throw InvalidConfig("decoder 'identity' requires gen_input_dims[" + std::to_string(i) + "] == dims[" +
                                    std::to_string(i) + "]");
    for (std::size_t w : encoder_hidden)
        if (w == 0) throw InvalidConfig("encoder_hidden widths must be >= 1");
    for (std::size_t w : decoder_hidden)
        if (w == 0) throw InvalidConfig("decoder_hidden widths must be >= 1");
}

std::size_t DiccaParams::param_count() const {
    std::size_t n = 0;
    for_each_block([&](const std::string&, std::span<const double> p, ParamGroup) { n += p.size(); });
    return n;
}

DiccaParams make_params(const DiccaConfig& c) {
    c.validate();
    DiccaParams p;
    for (std::size_t m = 0; m < c.views(); ++m) {
        p.lambda_mats.emplace_back(c.gen_input_dim(m), c.k_shared);
        p.w_mats.emplace_back(c.gen_input_dim(m), c.private_dim(m));
        p.generators.push_back(build_generator(c, m));
        p.log_psi.emplace_back(c.dims[m], 0.0);
    }
    p.shared_encoder = build_encoder(c, c.fused_width(), c.k_shared, true);
    if (!c.disable_private)
        for (std::size_t m = 0; m < c.views(); ++m)
            p.private_encoders.push_back(build_encoder(c, c.dims[m], c.private_dim(m), false));
    return p;
}

DiccaParams init_params(const DiccaConfig& c, std::uint64_t seed) {
    DiccaParams p = make_params(c);
    auto fill = [](Matrix& a, Rng& rng) {
        if (a.empty()) return;
        const double bound = std::sqrt(6.0 / static_cast<double>(a.rows() + a.cols()));
        for (double& v : a.values()) v = rng.uniform(-bound, bound);
    };
    for (std::size_t m = 0; m < c.views(); ++m) {
        Rng rng(mix_seed(seed, {0x11, m}));
        fill(p.lambda_mats[m], rng);
        fill(p.w_mats[m], rng);
        p.generators[m].init_uniform(rng);
    }
    Rng enc_rng(mix_seed(seed, {0x22}));
    p.shared_encoder.mean.init_uniform(enc_rng);
    p.shared_encoder.std.init_uniform(enc_rng);
    for (auto& e : p.private_encoders) {
        e.mean.init_uniform(enc_rng);
        e.std.init_uniform(enc_rng);
    }
    return p;
}

DiccaParams zeros_like(const DiccaParams& p) {
    DiccaParams z = p;
    z.for_each_block([](const std::string&, std::span<double> b, ParamGroup) { std::fill(b.begin(), b.end(), 0.0); });
    return z;
}

void axpy(DiccaParams& y, double a, const DiccaParams& x) {
    std::vector<std::span<const double>> src;
    x.for_each_block([&](const std::string&, std::span<const double> b, ParamGroup) { src.push_back(b); });
    std::size_t i = 0;
    y.for_each_block([&](const std::string& path, std::span<double> b, ParamGroup) {
        if (i >= src.size() || src[i].size() != b.size()) throw ShapeMismatch("axpy: parameter block " + path + " differs");
        for (std::size_t k = 0; k < b.size(); ++k) b[k] += a * src[i][k];
        ++i;
    });
    if (i != src.size()) throw ShapeMismatch("axpy: parameter sets differ");
}

Encoded encode(const DiccaConfig& c, const DiccaParams& params, std::span<const Matrix> views) {
    check_views(c, views);
    Encoded e;
    const Matrix fused = fuse(c, views);
    e.shared = {nn::predict(params.shared_encoder.mean, fused), nn::predict(params.shared_encoder.std, fused)};
    check_positive(e.shared.std, "shared encoder");
    if (!c.disable_private) {
        for (std::size_t m = 0; m < c.views(); ++m) {
            e.privates.push_back({nn::predict(params.private_encoders[m].mean, views[m]),
                                  nn::predict(params.private_encoders[m].std, views[m])});
            check_positive(e.privates.back().std, "private encoder");
        }
    }
    return e;
}

Matrix reparam_sample(const GaussianBatch& post, const Matrix& noise) {
    require_same_shape(post.mean, noise, "reparam_sample");
    require_same_shape(post.std, noise, "reparam_sample");
    Matrix z(noise.rows(), noise.cols());
    for (std::size_t i = 0; i < z.size(); ++i)
        z.data()[i] = post.mean.data()[i] + post.std.data()[i] * noise.data()[i];
    return z;
}

std::vector<Matrix> decode(const DiccaConfig& c, const DiccaParams& params, const Matrix& z,
                           std::span<const Matrix> z_privates) {
    if (z.cols() != c.k_shared)
        throw ShapeMismatch("decode: shared latent has " + std::to_string(z.cols()) + " columns, expected " +
                            std::to_string(c.k_shared));
    const bool has_private = !c.disable_private;
    if (has_private && z_privates.size() != c.views()) throw ShapeMismatch("decode: one private latent per view expected");
    std::vector<Matrix> out;
    for (std::size_t m = 0; m < c.views(); ++m) {
        const Matrix* zp = nullptr;
        if (has_private) {
            zp = &z_privates[m];
            if (zp->cols() != c.private_dim(m) || zp->rows() != z.rows())
                throw ShapeMismatch("decode: private latent " + std::to_string(m) + " has the wrong shape");
        }
        out.push_back(nn::predict(params.generators[m], gated_input(z, params.lambda_mats[m], zp, params.w_mats[m])));
    }
    return out;
}

std::vector<Matrix> reconstruct(const DiccaConfig& c, const DiccaParams& params, std::span<const Matrix> views) {
    const Encoded e = encode(c, params, views);
    std::vector<Matrix> zp;
    for (const auto& p : e.privates) zp.push_back(p.mean);
    return decode(c, params, e.shared.mean, zp);
}

Vector gaussian_loglik(const Matrix& x, const Matrix& mean, std::span<const double> log_psi) {
    require_same_shape(x, mean, "gaussian_loglik");
    if (log_psi.size() != x.cols()) throw ShapeMismatch("gaussian_loglik: log_psi length differs from feature count");
    const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
    Vector out(x.rows(), 0.0);
    for (std::size_t n = 0; n < x.rows(); ++n) {
        double s = 0.0;
        for (std::size_t d = 0; d < x.cols(); ++d) {
            const double r = x(n, d) - mean(n, d);
            s += -half_log_2pi - 0.5 * log_psi[d] - 0.5 * r * r * std::exp(-log_psi[d]);
        }
        out[n] = s;
    }
    return out;
}

Vector kl_std_normal(const GaussianBatch& post) {
    require_same_shape(post.mean, post.std, "kl_std_normal");
    Vector out(post.mean.rows(), 0.0);
    for (std::size_t n = 0; n < post.mean.rows(); ++n) {
        double s = 0.0;
        for (std::size_t k = 0; k < post.mean.cols(); ++k) {
            const double mu = post.mean(n, k), sd = post.std(n, k);
            s += 0.5 * (mu * mu + sd * sd - 1.0 - 2.0 * std::log(sd));
        }
        out[n] = s;
    }
    return out;
}

double kl_decomposition_check(double shared_kl, std::span<const double> private_kls) {
    double total = shared_kl;
    for (double v : private_kls) total += v;
    return total;
}

ElboNoise draw_noise(const DiccaConfig& c, std::size_t batch, Rng& rng) {
    ElboNoise e;
    for (std::size_t s = 0; s < c.mc_samples; ++s) {
        e.shared.push_back(rng.normal_matrix(batch, c.k_shared));
        std::vector<Matrix> p;
        if (!c.disable_private)
            for (std::size_t m = 0; m < c.views(); ++m) p.push_back(rng.normal_matrix(batch, c.private_dim(m)));
        e.privates.push_back(std::move(p));
    }
    return e;
}

double ElboParts::total() const {
    double v = 0.0;
    for (double r : reconstruction) v += r;
    v -= kl_shared;
    for (double k : kl_private) v -= k;
    v -= theta_prior;
    v -= penalty_shared;
    v -= penalty_private;
    return v;
}

ElboResult elbo(const DiccaConfig& config, const DiccaParams& params, std::span<const Matrix> views,
                const ElboNoise& noise, const ObjectiveOptions& options) {
    return evaluate(config, params, views, noise, options, false, false).result;
}

ElboGradient elbo_gradient(const DiccaConfig& config, const DiccaParams& params, std::span<const Matrix> views,
                           const ElboNoise& noise, const ObjectiveOptions& options, bool include_penalty) {
    return evaluate(config, params, views, noise, options, true, include_penalty);
}

MultiViewDataset sample_generative(const DiccaConfig& c, const DiccaParams& params_in, std::size_t n,
                                   std::uint64_t seed, bool sample_prior_weights) {
    c.validate();
    if (n == 0) throw InvalidConfig("sample_generative: n must be >= 1");
    if (sample_prior_weights && !(c.lambda > 0.0))
        throw InvalidConfig("sample_generative: sampling prior weights requires lambda > 0");
    DiccaParams params = params_in;

    if (sample_prior_weights) {
        const SparsityPrior prior{c.lambda};
        Rng rng(seed, 200);
        auto redraw = [&](Matrix& a) {
            for (std::size_t j = 0; j < a.cols(); ++j) {
                const double gamma2 = rng.gamma(prior.shape(a.rows()), prior.rate());
                const double sd = std::sqrt(gamma2);
                for (std::size_t i = 0; i < a.rows(); ++i) a(i, j) = sd * rng.normal();
            }
        };
        for (std::size_t m = 0; m < c.views(); ++m) {
            redraw(params.lambda_mats[m]);
            redraw(params.w_mats[m]);
        }
    }

    Rng latent_rng(seed, 0);
    const Matrix z = latent_rng.normal_matrix(n, c.k_shared);
    std::vector<Matrix> zp;
    if (!c.disable_private)
        for (std::size_t m = 0; m < c.views(); ++m) {
            Rng r(seed, 1 + m);
            zp.push_back(r.normal_matrix(n, c.private_dim(m)));
        }
    std::vector<Matrix> means = decode(c, params, z, zp);

    MultiViewDataset out;
    for (std::size_t m = 0; m < c.views(); ++m) {
        Rng noise_rng(seed, 100 + m);
        Matrix& x = means[m];
        for (std::size_t r = 0; r < x.rows(); ++r)
            for (std::size_t d = 0; d < x.cols(); ++d)
                x(r, d) += std::sqrt(std::exp(params.log_psi[m][d])) * noise_rng.normal();
        out.views.push_back(std::move(x));
        out.view_names.push_back("view" + std::to_string(m + 1));
    }
    out.provenance = "sample_generative seed=" + std::to_string(seed) +
                     (sample_prior_weights ? " prior_weights=1" : " prior_weights=0");
    return out;
}

}  // namespace dicca::model
