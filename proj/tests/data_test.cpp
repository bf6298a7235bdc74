#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>

#include <gtest/gtest.h>

#include "dicca/data.hpp"
#include "dicca/errors.hpp"
#include "dicca/random.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace dicca {
namespace {

using testing::max_abs_diff;

std::string what_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const std::exception& e) {
        return e.what();
    }
    return "";
}

// ---- synthetic ---------------------------------------------------------------

model::DiccaConfig three_views() {
    model::DiccaConfig c;
    c.dims = {5, 4, 6};
    c.k_shared = 3;
    c.k_private = {2, 1, 2};
    return c;
}

data::SyntheticSpec masked_spec() {
    data::SyntheticSpec s;
    s.shared_mask = {{true, false, true}, {true, true, false}, {false, true, true}};
    s.private_mask = {{true, false}, {true}, {true, true}};
    return s;
}

TEST(Synthetic, MaskedColumnsAreExactlyZero) {
    const auto [d, t] = data::make_synthetic(three_views(), masked_spec(), 50, 1);
    ASSERT_EQ(d.views.size(), 3u);
    for (std::size_t m = 0; m < 3; ++m) {
        EXPECT_EQ(d.views[m].rows(), 50u);
        for (std::size_t k = 0; k < 3; ++k) {
            const double n = column_norm(t.lambda_mats[m], k);
            if (t.shared_mask[m][k])
                EXPECT_NEAR(n, 1.0, 1e-12);
            else
                EXPECT_EQ(n, 0.0);
        }
    }
    EXPECT_EQ(column_norm(t.w_mats[0], 1), 0.0);
}

TEST(Synthetic, MaskedLatentDoesNotReachView) {
    const auto [d, t] = data::make_synthetic(three_views(), masked_spec(), 40, 2);
    EXPECT_EQ(data::planted_views(t, t.z, t.z_privates, 2), d.views);
    Matrix z = t.z;
    Rng rng(9);
    for (std::size_t r = 0; r < z.rows(); ++r) z(r, 1) = 10.0 * rng.normal();
    const auto changed = data::planted_views(t, z, t.z_privates, 2);
    EXPECT_EQ(changed[0], d.views[0]);  // view 0 ignores shared dim 1
    EXPECT_NE(changed[1], d.views[1]);
    auto zp = t.z_privates;
    for (std::size_t r = 0; r < zp[0].rows(); ++r) zp[0](r, 1) = rng.normal();
    EXPECT_EQ(data::planted_views(t, t.z, zp, 2)[0], d.views[0]);
}

TEST(Synthetic, NoiselessLinearIsExactProduct) {
    auto spec = masked_spec();
    spec.noise_std = {0.0, 0.0, 0.0};
    const auto [d, t] = data::make_synthetic(three_views(), spec, 30, 3);
    for (std::size_t m = 0; m < 3; ++m) {
        const Matrix want = oracle::multiply(t.z, t.lambda_mats[m].transposed()) +
                            oracle::multiply(t.z_privates[m], t.w_mats[m].transposed());
        EXPECT_LT(max_abs_diff(d.views[m], want), 1e-12);
    }
}

TEST(Synthetic, TanhGenerator) {
    auto spec = masked_spec();
    spec.noise_std = {0.0, 0.0, 0.0};
    spec.generator = data::SyntheticGenerator::tanh;
    const auto [d, t] = data::make_synthetic(three_views(), spec, 10, 4);
    const Matrix lin = oracle::multiply(t.z, t.lambda_mats[1].transposed()) +
                       oracle::multiply(t.z_privates[1], t.w_mats[1].transposed());
    for (std::size_t i = 0; i < lin.size(); ++i) EXPECT_NEAR(d.views[1].data()[i], std::tanh(lin.data()[i]), 1e-12);
    EXPECT_EQ(data::synthetic_generator_from_string("tanh"), data::SyntheticGenerator::tanh);
    EXPECT_THROW(data::synthetic_generator_from_string("relu"), InvalidConfig);
}

TEST(Synthetic, CovarianceWithLatentsRecoversLoadings) {
    const std::size_t n = 100000;
    const auto [d, t] = data::make_synthetic(three_views(), masked_spec(), n, 5);
    for (std::size_t m = 0; m < 3; ++m) {
        const Matrix cov = oracle::covariance(d.views[m], t.z);
        for (std::size_t i = 0; i < cov.rows(); ++i) {
            double var = t.noise_std[m] * t.noise_std[m];
            for (std::size_t k = 0; k < 3; ++k) var += t.lambda_mats[m](i, k) * t.lambda_mats[m](i, k);
            for (std::size_t k = 0; k < t.w_mats[m].cols(); ++k) var += t.w_mats[m](i, k) * t.w_mats[m](i, k);
            for (std::size_t k = 0; k < 3; ++k) {
                // Var(x z) = Var(x) Var(z) + Cov(x, z)^2 for jointly Gaussian x, z.
                const double l = t.lambda_mats[m](i, k);
                EXPECT_NEAR(cov(i, k), l, 3.0 * std::sqrt((var + l * l) / n))
                    << "view " << m << " feature " << i << " dim " << k;
                if (!t.shared_mask[m][k]) {
                    const Vector x = d.views[m].column(i), z = t.z.column(k);
                    EXPECT_LT(std::abs(oracle::pearson(x, z)), 3.0 / std::sqrt(static_cast<double>(n)));
                }
            }
        }
    }
}

TEST(Synthetic, DeterministicAndValidated) {
    const auto a = data::make_synthetic(three_views(), masked_spec(), 20, 6);
    const auto b = data::make_synthetic(three_views(), masked_spec(), 20, 6);
    EXPECT_EQ(a.first, b.first);
    EXPECT_EQ(a.second, b.second);
    EXPECT_NE(a.first, data::make_synthetic(three_views(), masked_spec(), 20, 7).first);

    auto bad = masked_spec();
    bad.shared_mask[1] = {false, false, false};
    bad.private_mask[1] = {false};
    EXPECT_THROW(data::make_synthetic(three_views(), bad, 20, 6), InvalidStructure);
    EXPECT_THROW(data::make_synthetic(three_views(), masked_spec(), 1, 6), InvalidConfig);
    bad = masked_spec();
    bad.shared_mask.pop_back();
    EXPECT_THROW(data::make_synthetic(three_views(), bad, 20, 6), InvalidStructure);
}

// ---- two-view digits -----------------------------------------------------------

// 5x5 images: pixel `label` lights the class, pixel 10 + i identifies image i.
std::pair<Matrix, std::vector<int>> tagged_images() {
    const std::size_t n = 13;
    Matrix img(n, 25, 0.0);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        labels[i] = i < 12 ? static_cast<int>(i % 3) : 9;
        img(i, static_cast<std::size_t>(labels[i])) = 1.0;
        img(i, 10 + i) = 1.0;
    }
    return {img, labels};
}

TEST(TwoView, PartnersShareLabelAndDifferFromSelf) {
    const auto [img, labels] = tagged_images();
    const auto d = data::make_noisy_two_view(img, labels, 3);
    ASSERT_EQ(d.views.size(), 2u);
    EXPECT_EQ(*d.labels, labels);
    EXPECT_EQ(d.view_names, (std::vector<std::string>{"rotated", "noisy"}));
    for (std::size_t i = 0; i < img.rows(); ++i) {
        std::vector<std::size_t> lit;
        for (std::size_t p = 0; p < 25; ++p)
            if (d.views[1](i, p) == 1.0) lit.push_back(p);
        ASSERT_EQ(lit.size(), 2u) << "sample " << i;
        EXPECT_EQ(lit[0], static_cast<std::size_t>(labels[i]));
        const std::size_t partner = lit[1] - 10;
        EXPECT_EQ(labels[partner], labels[i]);
        if (i < 12)
            EXPECT_NE(partner, i);
        else
            EXPECT_EQ(partner, i);
    }
    EXPECT_NE(d.provenance.find("self_pairs=1"), std::string::npos);
}

TEST(TwoView, PixelsInUnitIntervalAndZeroAngleIsIdentity) {
    const auto [img, labels] = tagged_images();
    const auto d = data::make_noisy_two_view(img, labels, 4, {0.0});
    EXPECT_LT(max_abs_diff(d.views[0], img), 1e-12);
    const auto r = data::make_noisy_two_view(img, labels, 4);
    for (const auto& v : r.views)
        for (double x : v.values()) {
            EXPECT_GE(x, 0.0);
            EXPECT_LE(x, 1.0);
        }
    EXPECT_EQ(r, data::make_noisy_two_view(img, labels, 4));
    EXPECT_NE(r.views[0], d.views[0]);
}

TEST(TwoView, RealDigitsFixture) {
    const Matrix img = data::load_idx_images(std::string(DICCA_TEST_DATA) + "/mnist2000-images.idx3-ubyte");
    const auto labels = data::load_idx_labels(std::string(DICCA_TEST_DATA) + "/mnist2000-labels.idx1-ubyte");
    ASSERT_EQ(img.rows(), 2000u);
    ASSERT_EQ(img.cols(), 784u);
    ASSERT_EQ(labels.size(), 2000u);
    for (int l : labels) {
        EXPECT_GE(l, 0);
        EXPECT_LE(l, 9);
    }
    const auto d = data::make_noisy_two_view(img, labels, 1);
    for (double x : d.views[1].values()) ASSERT_TRUE(x >= 0.0 && x <= 1.0);
    EXPECT_NE(d.provenance.find("self_pairs=0"), std::string::npos);
}

TEST(TwoView, Errors) {
    const auto [img, labels] = tagged_images();
    EXPECT_THROW(data::make_noisy_two_view(img, std::vector<int>(3), 1), ShapeMismatch);
    EXPECT_THROW(data::make_noisy_two_view(Matrix(2, 5), std::vector<int>(2), 1), ShapeMismatch);
    auto bad = labels;
    bad[0] = 11;
    EXPECT_THROW(data::make_noisy_two_view(img, bad, 1), InvalidIndex);
    EXPECT_THROW(data::make_noisy_two_view(img, labels, 1, {-1.0}), InvalidConfig);
}

TEST(Rotate, QuarterTurnsPermutePixels) {
    Rng rng(5);
    Vector img(16);
    for (double& v : img) v = rng.uniform();
    const Vector q = data::rotate_image(img, 4, std::numbers::pi / 2);
    // Each quarter turn maps some pixel (r, c) to another; four return home.
    Vector back = img;
    for (int i = 0; i < 4; ++i) back = data::rotate_image(back, 4, std::numbers::pi / 2);
    EXPECT_LT(max_abs_diff(back, img), 1e-9);
    std::multiset<long long> a, b;
    for (double v : img) a.insert(std::llround(v * 1e9));
    for (double v : q) b.insert(std::llround(v * 1e9));
    EXPECT_EQ(a, b);
    EXPECT_EQ(data::rotate_image(img, 4, 0.0), img);
    EXPECT_THROW(data::rotate_image(img, 5, 0.1), ShapeMismatch);
}

// ---- file formats -------------------------------------------------------------

std::vector<std::uint8_t> idx_images_bytes() {
    return {0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0, 2, 0, 255, 51, 102, 204, 153, 0, 255};
}

TEST(Idx, HandcraftedImages) {
    const Matrix m = data::parse_idx_images(idx_images_bytes());
    EXPECT_EQ(m, (Matrix{{0.0, 1.0, 0.2, 0.4}, {0.8, 0.6, 0.0, 1.0}}));
}

TEST(Idx, HandcraftedLabels) {
    const std::vector<std::uint8_t> b{0, 0, 8, 1, 0, 0, 0, 3, 7, 0, 9};
    EXPECT_EQ(data::parse_idx_labels(b), (std::vector<int>{7, 0, 9}));
}

TEST(Idx, RejectsBadInput) {
    auto b = idx_images_bytes();
    b[3] = 1;
    EXPECT_THROW(data::parse_idx_images(b), FormatError);
    EXPECT_NE(what_of([&] { data::parse_idx_images(b); }).find("offset"), std::string::npos);
    b = idx_images_bytes();
    b.pop_back();
    EXPECT_THROW(data::parse_idx_images(b), FormatError);
    b = idx_images_bytes();
    b.push_back(0);
    EXPECT_THROW(data::parse_idx_images(b), FormatError);
    EXPECT_THROW(data::parse_idx_images(std::vector<std::uint8_t>{0, 0, 8}), FormatError);
    EXPECT_THROW(data::parse_idx_labels(idx_images_bytes()), FormatError);
    EXPECT_THROW(data::load_idx_images("/nonexistent/file.idx"), FormatError);
}

TEST(Csv, ParsesNumbersAndHeaders) {
    EXPECT_EQ(data::parse_csv("1.0,2.0\n3.0,4.0"), (Matrix{{1, 2}, {3, 4}}));
    EXPECT_EQ(data::parse_csv("a,b\n1,2\n3,4\n"), (Matrix{{1, 2}, {3, 4}}));
    EXPECT_EQ(data::parse_csv("1e-3,-2\r\n3,4.5\r\n"), (Matrix{{1e-3, -2}, {3, 4.5}}));
}

TEST(Csv, ReportsRowAndColumn) {
    const std::string msg = what_of([] { data::parse_csv("1,2\n3,x\n", "v.csv"); });
    EXPECT_NE(msg.find("row 2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("col 2"), std::string::npos) << msg;
    EXPECT_THROW(data::parse_csv("1,2\n3\n"), FormatError);
    EXPECT_THROW(data::parse_csv(""), FormatError);
    EXPECT_THROW(data::parse_csv("a,b\n"), FormatError);
}

TEST(Csv, FilesAndLabels) {
    testing::TempDir dir("csv");
    {
        std::ofstream(dir.file("v.csv")) << "f1,f2\n1,2\n3,4\n";
        std::ofstream(dir.file("l.csv")) << "label\n3\n1\n";
        std::ofstream(dir.file("bad.csv")) << "label\n3.5\n";
    }
    EXPECT_EQ(data::load_csv_view(dir.file("v.csv")), (Matrix{{1, 2}, {3, 4}}));
    EXPECT_EQ(data::load_csv_labels(dir.file("l.csv")), (std::vector<int>{3, 1}));
    EXPECT_THROW(data::load_csv_labels(dir.file("bad.csv")), FormatError);
    EXPECT_THROW(data::load_csv_labels(dir.file("v.csv")), FormatError);
    EXPECT_THROW(data::load_csv_view(dir.file("missing.csv")), FormatError);
}

// ---- preprocessing -------------------------------------------------------------

TEST(Standardize, MomentsAndConstantFeatures) {
    Rng rng(7);
    MultiViewDataset d;
    Matrix a = rng.normal_matrix(50, 3) * 4.0;
    for (std::size_t r = 0; r < 50; ++r) {
        a(r, 0) += 10.0;
        a(r, 2) = 2.5;
    }
    d.views = {a, rng.normal_matrix(50, 2)};
    const auto s = data::standardize(d);
    for (std::size_t m = 0; m < 2; ++m)
        for (std::size_t j = 0; j < d.views[m].cols(); ++j) {
            double mean = 0, sq = 0;
            for (std::size_t r = 0; r < 50; ++r) mean += s.data.views[m](r, j) / 50;
            for (std::size_t r = 0; r < 50; ++r) sq += std::pow(s.data.views[m](r, j) - mean, 2) / 50;
            EXPECT_LT(std::abs(mean), 1e-12);
            if (m == 0 && j == 2) {
                EXPECT_TRUE(s.stats.constant[0][2]);
                EXPECT_EQ(s.stats.scale[0][2], 1.0);
                EXPECT_EQ(sq, 0.0);
            } else {
                EXPECT_NEAR(std::sqrt(sq), 1.0, 1e-12);
                EXPECT_FALSE(s.stats.constant[m][j]);
            }
        }
    EXPECT_NEAR(s.stats.mean[0][2], 2.5, 1e-15);
    const auto twice = data::standardize(s.data);
    EXPECT_LT(max_abs_diff(twice.data.views[0], s.data.views[0]), 1e-12);
    EXPECT_LT(max_abs_diff(twice.data.views[1], s.data.views[1]), 1e-12);
    MultiViewDataset one;
    one.views = {Matrix(1, 2)};
    EXPECT_THROW(data::standardize(one), InvalidConfig);
}

MultiViewDataset indexed(std::size_t n) {
    MultiViewDataset d;
    Matrix a(n, 1), b(n, 2);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        a(i, 0) = static_cast<double>(i);
        b(i, 0) = b(i, 1) = -static_cast<double>(i);
        labels[i] = static_cast<int>(i % 10);
    }
    d.views = {a, b};
    d.labels = labels;
    return d;
}

TEST(Split, PartitionsRows) {
    const auto d = indexed(103);
    const std::vector<double> f{0.7, 0.2, 0.1};
    const auto s = data::split(d, f, 5);
    EXPECT_EQ(s.train.samples(), 72u);
    EXPECT_EQ(s.validation.samples(), 20u);
    EXPECT_EQ(s.test.samples(), 11u);
    std::set<std::size_t> all;
    for (const auto* rows : {&s.train_rows, &s.validation_rows, &s.test_rows}) all.insert(rows->begin(), rows->end());
    EXPECT_EQ(all.size(), 103u);
    for (std::size_t i = 0; i < s.train_rows.size(); ++i) {
        EXPECT_EQ(s.train.views[0](i, 0), static_cast<double>(s.train_rows[i]));
        EXPECT_EQ(s.train.views[1](i, 1), -static_cast<double>(s.train_rows[i]));
        EXPECT_EQ((*s.train.labels)[i], static_cast<int>(s.train_rows[i] % 10));
    }
    const auto again = data::split(d, f, 5);
    EXPECT_EQ(again.train_rows, s.train_rows);
    EXPECT_EQ(again.test, s.test);
    EXPECT_NE(data::split(d, f, 6).train_rows, s.train_rows);
}

TEST(Split, SingleFractionAndPartialSums) {
    const auto d = indexed(10);
    const std::vector<double> all{1.0};
    const auto s = data::split(d, all, 1);
    EXPECT_EQ(s.train.samples(), 10u);
    EXPECT_EQ(s.test.samples(), 0u);
    const std::vector<double> part{0.5, 0.25};
    const auto p = data::split(d, part, 1);
    EXPECT_EQ(p.train.samples(), 5u);
    EXPECT_EQ(p.validation.samples(), 2u);
}

TEST(Split, Errors) {
    const auto d = indexed(3);
    EXPECT_THROW(data::split(d, std::vector<double>{0.5, 0.1}, 1), InvalidSplit);
    EXPECT_THROW(data::split(d, std::vector<double>{}, 1), InvalidSplit);
    EXPECT_THROW(data::split(d, std::vector<double>{0.7, 0.7}, 1), InvalidSplit);
    EXPECT_THROW(data::split(d, std::vector<double>{0.2, 0.2, 0.2, 0.2}, 1), InvalidSplit);
    EXPECT_THROW(data::split(d, std::vector<double>{-0.5}, 1), InvalidSplit);
}

TEST(Dataset, ValidateAndSubset) {
    auto d = indexed(5);
    EXPECT_NO_THROW(d.validate());
    const std::vector<std::size_t> rows{4, 0};
    const auto s = d.subset(rows);
    EXPECT_EQ(s.views[0], (Matrix{{4.0}, {0.0}}));
    EXPECT_EQ(*s.labels, (std::vector<int>{4, 0}));
    d.labels->pop_back();
    EXPECT_THROW(d.validate(), ShapeMismatch);
    d = indexed(5);
    d.views[1] = Matrix(4, 2);
    EXPECT_THROW(d.validate(), ShapeMismatch);
}

}  // namespace
}  // namespace dicca
