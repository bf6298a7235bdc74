#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "dicca/errors.hpp"
#include "dicca/metrics.hpp"
#include "dicca/random.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace dicca {
namespace {

using metrics::Loading;
using metrics::SupportMask;
using model::DiccaConfig;

DiccaConfig identity_config(std::size_t d, std::size_t k, std::size_t kp) {
    DiccaConfig c;
    c.dims = {d};
    c.k_shared = k;
    c.k_private = {kp};
    c.decoder = model::DecoderArch::identity;
    return c;
}

MultiViewDataset one_view(Matrix x) {
    MultiViewDataset d;
    d.views.push_back(std::move(x));
    return d;
}

// Two-view model with random parameters and data, for oracle comparisons.
struct Seeded {
    DiccaConfig config;
    model::DiccaParams params;
    MultiViewDataset data;
};

Seeded seeded(std::uint64_t seed) {
    Seeded s;
    s.config.dims = {4, 3};
    s.config.k_shared = 2;
    s.config.k_private = {2, 1};
    s.config.encoder = model::EncoderArch::mlp;
    s.config.encoder_hidden = {3};
    s.params = model::init_params(s.config, seed);
    Rng rng(seed, 5);
    s.params.for_each_block([&](const std::string&, std::span<double> b, model::ParamGroup) {
        for (double& v : b) v += 0.2 * rng.normal();
    });
    s.data.views = {rng.normal_matrix(7, 4), rng.normal_matrix(7, 3)};
    return s;
}

// Posterior-mean reconstruction evaluated row by row.
std::vector<Matrix> scalar_reconstruction(const Seeded& s) {
    std::vector<Matrix> out;
    for (std::size_t m = 0; m < 2; ++m) out.emplace_back(7, s.config.dims[m]);
    for (std::size_t r = 0; r < 7; ++r) {
        std::vector<double> fused;
        for (const auto& v : s.data.views) fused.insert(fused.end(), v.row(r).begin(), v.row(r).end());
        const auto z = oracle::scalar_forward_row(s.params.shared_encoder.mean, fused);
        for (std::size_t m = 0; m < 2; ++m) {
            const auto zp = oracle::scalar_forward_row(s.params.private_encoders[m].mean,
                                                       {s.data.views[m].row(r).begin(), s.data.views[m].row(r).end()});
            const auto& lam = s.params.lambda_mats[m];
            const auto& w = s.params.w_mats[m];
            std::vector<double> h(lam.rows(), 0.0);
            for (std::size_t i = 0; i < h.size(); ++i) {
                for (std::size_t k = 0; k < z.size(); ++k) h[i] += lam(i, k) * z[k];
                for (std::size_t k = 0; k < zp.size(); ++k) h[i] += w(i, k) * zp[k];
            }
            const auto y = oracle::scalar_forward_row(s.params.generators[m], h);
            for (std::size_t d = 0; d < y.size(); ++d) out[m](r, d) = y[d];
        }
    }
    return out;
}

TEST(Mse, PerfectReconstructionIsZero) {
    const auto c = identity_config(2, 2, 1);
    auto p = model::make_params(c);
    p.lambda_mats[0] = Matrix::identity(2);
    p.shared_encoder.mean.layers()[0].weight = Matrix::identity(2);
    Rng rng(1);
    const auto d = one_view(rng.normal_matrix(10, 2));
    EXPECT_EQ(metrics::reconstruction_mse(c, p, d)[0], 0.0);
    EXPECT_EQ(metrics::variance_explained_r2(c, p, d)[0], 1.0);
}

TEST(Mse, ConstantDecoder) {
    DiccaConfig c = identity_config(3, 1, 1);
    c.decoder = model::DecoderArch::linear;
    auto p = model::init_params(c, 2);
    auto& gen = p.generators[0].layers()[0];
    gen.weight = Matrix(3, 3);
    gen.bias = {2.5, 2.5, 2.5};
    EXPECT_EQ(metrics::reconstruction_mse(c, p, one_view(Matrix(4, 3, 2.5)))[0], 0.0);
    EXPECT_EQ(metrics::reconstruction_mse(c, p, one_view(Matrix(4, 3, 3.5)))[0], 1.0);
}

TEST(Mse, MatchesScalarLoopAndIsRowPermutationInvariant) {
    for (int seed = 0; seed < 5; ++seed) {
        const auto s = seeded(seed);
        const auto rec = scalar_reconstruction(s);
        const Vector mse = metrics::reconstruction_mse(s.config, s.params, s.data);
        const Vector r2 = metrics::variance_explained_r2(s.config, s.params, s.data);
        for (std::size_t m = 0; m < 2; ++m) {
            double ssr = 0, sst = 0;
            for (std::size_t i = 0; i < rec[m].size(); ++i) {
                const double x = s.data.views[m].data()[i], e = x - rec[m].data()[i];
                ssr += e * e;
                sst += x * x;
            }
            EXPECT_NEAR(mse[m], ssr / static_cast<double>(rec[m].size()), 1e-12);
            EXPECT_NEAR(r2[m], 1.0 - ssr / sst, 1e-12);
        }
        Rng rng(seed);
        const auto perm = permutation(7, rng);
        const Vector shuffled = metrics::reconstruction_mse(s.config, s.params, s.data.subset(perm));
        for (std::size_t m = 0; m < 2; ++m) EXPECT_NEAR(shuffled[m], mse[m], 1e-14);
    }
}

TEST(R2, ZeroReconstructionAndMeanModel) {
    DiccaConfig c = identity_config(2, 1, 1);
    c.decoder = model::DecoderArch::linear;
    auto p = model::make_params(c);
    Rng rng(3);
    Matrix x = rng.normal_matrix(20, 2);
    for (std::size_t r = 0; r < 20; ++r) x(r, 1) += 3.0;
    EXPECT_NEAR(metrics::variance_explained_r2(c, p, one_view(x))[0], 0.0, 1e-15);

    // Reconstruction = per-feature mean gives 1 - Var / second moment.
    double mean[2] = {0, 0};
    for (std::size_t r = 0; r < 20; ++r)
        for (int j = 0; j < 2; ++j) mean[j] += x(r, j) / 20;
    p.generators[0].layers()[0].bias = {mean[0], mean[1]};
    double var = 0, second = 0;
    for (std::size_t r = 0; r < 20; ++r)
        for (int j = 0; j < 2; ++j) {
            var += (x(r, j) - mean[j]) * (x(r, j) - mean[j]);
            second += x(r, j) * x(r, j);
        }
    EXPECT_NEAR(metrics::variance_explained_r2(c, p, one_view(x))[0], 1.0 - var / second, 1e-12);
    EXPECT_THROW(metrics::variance_explained_r2(c, p, one_view(Matrix(5, 2))), DegenerateView);
}

TEST(Mse, ShapeMismatch) {
    const auto s = seeded(1);
    auto d = s.data;
    d.views.pop_back();
    EXPECT_THROW(metrics::reconstruction_mse(s.config, s.params, d), ShapeMismatch);
    d = s.data;
    d.views[1] = Matrix(7, 5);
    EXPECT_THROW(metrics::variance_explained_r2(s.config, s.params, d), ShapeMismatch);
}

TEST(GroupDependency, ZeroAndSingleColumn) {
    const auto s = seeded(2);
    auto p = model::make_params(s.config);
    auto g = metrics::group_dependency(p);
    EXPECT_EQ(g.shared_max, 0.0);
    EXPECT_EQ(max_abs(g.normalized_shared()), 0.0);
    EXPECT_EQ(max_abs(g.normalized_private()), 0.0);
    p.lambda_mats[1](2, 1) = -3.0;
    g = metrics::group_dependency(p);
    const Matrix n = g.normalized_shared();
    for (std::size_t m = 0; m < 2; ++m)
        for (std::size_t k = 0; k < 2; ++k) EXPECT_EQ(n(m, k), m == 1 && k == 1 ? 1.0 : 0.0);
}

TEST(GroupDependency, MatchesColumnNorms) {
    const auto s = seeded(3);
    const auto g = metrics::group_dependency(s.params);
    ASSERT_EQ(g.priv.rows(), 2u);
    ASSERT_EQ(g.priv.cols(), 2u);
    double mx = 0;
    for (std::size_t m = 0; m < 2; ++m) {
        for (std::size_t k = 0; k < 2; ++k) {
            double n2 = 0;
            for (std::size_t i = 0; i < s.params.lambda_mats[m].rows(); ++i) n2 += std::pow(s.params.lambda_mats[m](i, k), 2);
            EXPECT_NEAR(g.shared(m, k), std::sqrt(n2), 1e-12);
            mx = std::max(mx, std::sqrt(n2));
        }
        for (std::size_t k = 0; k < s.config.k_private[m]; ++k) {
            double n2 = 0;
            for (std::size_t i = 0; i < s.params.w_mats[m].rows(); ++i) n2 += std::pow(s.params.w_mats[m](i, k), 2);
            EXPECT_NEAR(g.priv(m, k), std::sqrt(n2), 1e-12);
        }
    }
    EXPECT_EQ(g.priv(1, 1), 0.0);  // view 1 has one private dim
    EXPECT_NEAR(g.shared_max, mx, 1e-12);
}

TEST(TopFeatures, Examples) {
    auto c = identity_config(3, 2, 1);
    auto p = model::make_params(c);
    p.lambda_mats[0].set_column(1, Vector{0.1, -0.9, 0.5});
    EXPECT_EQ(metrics::top_features(c, p, 0, 1, 2, metrics::Which::shared),
              (std::vector<Loading>{{2, 0.9}, {3, 0.5}}));
    p.w_mats[0].set_column(0, Vector{0.4, -0.4, 0.4});
    EXPECT_EQ(metrics::top_features(c, p, 0, 0, 5, metrics::Which::priv),
              (std::vector<Loading>{{1, 0.4}, {2, 0.4}, {3, 0.4}}));
    EXPECT_THROW(metrics::top_features(c, p, 1, 0, 2, metrics::Which::shared), InvalidIndex);
    EXPECT_THROW(metrics::top_features(c, p, 0, 2, 2, metrics::Which::shared), InvalidIndex);
    EXPECT_THROW(metrics::top_features(c, p, 0, 1, 2, metrics::Which::priv), InvalidIndex);
}

TEST(TopFeatures, MatchesSortOracle) {
    for (int seed = 0; seed < 10; ++seed) {
        auto c = identity_config(9, 3, 2);
        const auto p = model::init_params(c, seed);
        const std::size_t k = seed % 3;
        const auto got = metrics::top_features(c, p, 0, k, 4, metrics::Which::shared);
        std::vector<std::pair<double, std::size_t>> ref;
        for (std::size_t i = 0; i < 9; ++i) ref.push_back({-std::abs(p.lambda_mats[0](i, k)), i + 1});
        std::sort(ref.begin(), ref.end());
        ASSERT_EQ(got.size(), 4u);
        for (std::size_t i = 0; i < 4; ++i) {
            EXPECT_EQ(got[i].feature, ref[i].second);
            EXPECT_EQ(got[i].magnitude, -ref[i].first);
        }
    }
}

TEST(TopFeatures, ComposesThroughFirstAffineLayer) {
    DiccaConfig c = identity_config(3, 1, 1);
    c.decoder = model::DecoderArch::linear;
    c.gen_input_dims = {2};
    auto p = model::make_params(c);
    p.lambda_mats[0] = Matrix{{1.0}, {2.0}};
    p.generators[0].layers()[0].weight = Matrix{{1.0, 0.0, -1.0}, {0.5, 0.25, 3.0}};
    EXPECT_EQ(metrics::top_features(c, p, 0, 0, 3, metrics::Which::shared),
              (std::vector<Loading>{{3, 5.0}, {1, 2.0}, {2, 0.5}}));
}

TEST(SupportF1, Examples) {
    const SupportMask a{{{true, false, true}}, {{true}}};
    EXPECT_EQ(metrics::support_f1(a, a), 1.0);
    const SupportMask b{{{false, true, false}}, {{false}}};
    EXPECT_EQ(metrics::support_f1(b, a), 0.0);
    const SupportMask truth{{{true, true, true, true}}, {{}}};
    const SupportMask half{{{true, true, false, false}}, {{}}};
    EXPECT_NEAR(metrics::support_f1(half, truth), 2.0 / 3.0, 1e-15);
    const SupportMask none{{{false, false}}, {{false}}};
    EXPECT_EQ(metrics::support_f1(none, none), 1.0);
    EXPECT_THROW(metrics::support_f1(a, none), ShapeMismatch);
}

TEST(MaskFromParams, Thresholds) {
    const auto s = seeded(4);
    auto p = s.params;
    p.lambda_mats[0].set_column(1, Vector(p.lambda_mats[0].rows(), 0.0));
    auto mask = metrics::mask_from_params(p);
    EXPECT_FALSE(mask.shared[0][1]);
    EXPECT_TRUE(mask.shared[0][0]);
    for (double tau : {0.0, 0.5, 1.0}) {
        mask = metrics::mask_from_params(p, tau);
        for (std::size_t m = 0; m < 2; ++m)
            for (std::size_t k = 0; k < 2; ++k) EXPECT_EQ(mask.shared[m][k], column_norm(p.lambda_mats[m], k) > tau);
        for (std::size_t m = 0; m < 2; ++m)
            for (std::size_t k = 0; k < s.config.k_private[m]; ++k)
                EXPECT_EQ(mask.priv[m][k], column_norm(p.w_mats[m], k) > tau);
    }
    for (auto& l : p.lambda_mats)
        for (std::size_t k = 0; k < l.cols(); ++k) {
            Vector col = l.column(k);
            const double n = column_norm(l, k);
            for (double& v : col) v /= n;
            l.set_column(k, col);
        }
    mask = metrics::mask_from_params(p, 2.0);
    for (const auto& v : mask.shared)
        for (bool b : v) EXPECT_FALSE(b);
}

TEST(Alignment, BestAssignment) {
    const Matrix score{{0.1, 0.9, 0.0}, {0.8, 0.2, 0.1}, {0.0, 0.3, 0.7}};
    EXPECT_EQ(metrics::best_assignment(score), (std::vector<std::size_t>{1, 0, 2}));
    // Greedy row order would take (0,0) first; the optimum does not.
    const Matrix trap{{0.9, 0.85}, {0.8, 0.0}};
    EXPECT_EQ(metrics::best_assignment(trap), (std::vector<std::size_t>{1, 0}));
}

TEST(Alignment, RecoversPermutedLoadingsAndLatents) {
    Rng rng(5);
    const Matrix ref = rng.normal_matrix(6, 4);
    const std::vector<std::size_t> perm{2, 0, 3, 1};
    Matrix est(6, 4);
    for (std::size_t i = 0; i < 4; ++i) est.set_column(perm[i], ref.column(i) );
    est *= -2.0;
    const std::vector<Matrix> refs{ref}, ests{est};
    EXPECT_EQ(metrics::best_assignment(metrics::loading_similarity(refs, ests)), perm);

    const Matrix z = rng.normal_matrix(200, 4);
    Matrix zest(200, 4);
    for (std::size_t i = 0; i < 4; ++i) zest.set_column(perm[i], z.column(i));
    EXPECT_EQ(metrics::best_assignment(metrics::latent_similarity(z, zest)), perm);
    EXPECT_NEAR(metrics::latent_similarity(z, zest)(0, 2), 1.0, 1e-12);

    const std::vector<std::vector<bool>> mask{{true, false, true, false}};
    EXPECT_EQ(metrics::permute_columns(mask, {1, 0, 3, 2}), (std::vector<std::vector<bool>>{{false, true, false, true}}));
}

}  // namespace
}  // namespace dicca
