#pragma once

#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dicca/dataset.hpp"
#include "dicca/model.hpp"

namespace dicca::data {

// ---- planted synthetic structure -------------------------------------------

enum class SyntheticGenerator { linear, tanh };

std::string_view to_string(SyntheticGenerator g);
SyntheticGenerator synthetic_generator_from_string(std::string_view s);

// Which latent columns feed each view. Empty masks mean "all active".
struct SyntheticSpec {
    std::vector<std::vector<bool>> shared_mask;   // M x K
    std::vector<std::vector<bool>> private_mask;  // M x K_m
    SyntheticGenerator generator = SyntheticGenerator::linear;
    Vector noise_std;            // per view; empty means 0.1 everywhere
    double shared_scale = 1.0;   // norm of every active lambda column
    double private_scale = 1.0;  // norm of every active W column

    friend bool operator==(const SyntheticSpec&, const SyntheticSpec&) = default;
};

struct PlantedTruth {
    std::vector<std::vector<bool>> shared_mask;
    std::vector<std::vector<bool>> private_mask;
    std::vector<Matrix> lambda_mats;  // d_m x K
    std::vector<Matrix> w_mats;       // d_m x K_m
    SyntheticGenerator generator = SyntheticGenerator::linear;
    Vector noise_std;
    Matrix z;                       // N x K
    std::vector<Matrix> z_privates;  // N x K_m

    friend bool operator==(const PlantedTruth&, const PlantedTruth&) = default;
};

// Standard-normal latents, unit-direction active columns scaled by the spec,
// exact zeros elsewhere, then x_m = g(z lambda_m^T + z_m W_m^T) + noise.
// Uses config.dims, k_shared and k_private (disable_private is ignored).
std::pair<MultiViewDataset, PlantedTruth> make_synthetic(const model::DiccaConfig& config,
                                                         const SyntheticSpec& spec, std::size_t n,
                                                         std::uint64_t seed);

// The views make_synthetic would produce for the given latents. The noise
// depends only on the seed, so swapping latents isolates their effect.
std::vector<Matrix> planted_views(const PlantedTruth& truth, const Matrix& z, std::span<const Matrix> z_privates,
                                  std::uint64_t seed);

// ---- two-view noisy digits -------------------------------------------------

// Rotation about the image centre, bilinear interpolation, zero outside.
// `side` is the image width (= height); pixels are row-major.
Vector rotate_image(std::span<const double> image, std::size_t side, double angle);

struct TwoViewOptions {
    double max_angle = std::numbers::pi / 4.0;
};

// View 1: each image rotated by U(-max_angle, max_angle). View 2: a random
// other image with the same label plus U(0, 1) noise, clipped to [0, 1].
MultiViewDataset make_noisy_two_view(const Matrix& images, const std::vector<int>& labels, std::uint64_t seed,
                                     const TwoViewOptions& options = {});

// ---- file formats ----------------------------------------------------------

// Rows are samples. The first line is a header when any cell is non-numeric.
Matrix parse_csv(std::string_view text, const std::string& source = "csv");
Matrix load_csv_view(const std::string& path);
std::vector<int> load_csv_labels(const std::string& path);

std::vector<std::uint8_t> read_file_bytes(const std::string& path);
std::string read_file_text(const std::string& path);

// IDX containers: images (magic 0x00000803) scaled to [0, 1] by /255 and
// flattened to rows, labels (magic 0x00000801).
Matrix parse_idx_images(std::span<const std::uint8_t> bytes);
std::vector<int> parse_idx_labels(std::span<const std::uint8_t> bytes);
Matrix load_idx_images(const std::string& path);
std::vector<int> load_idx_labels(const std::string& path);

// ---- preprocessing ---------------------------------------------------------

struct Standardization {
    std::vector<Vector> mean;
    std::vector<Vector> scale;
    std::vector<std::vector<bool>> constant;  // zero-variance features (scale 1)
};

struct Standardized {
    MultiViewDataset data;
    Standardization stats;
};

// Per-feature zero mean and unit population standard deviation.
Standardized standardize(const MultiViewDataset& data);

struct Split {
    MultiViewDataset train;
    MultiViewDataset validation;
    MultiViewDataset test;
    std::vector<std::size_t> train_rows;
    std::vector<std::size_t> validation_rows;
    std::vector<std::size_t> test_rows;
};

// Seeded disjoint row partition with 1 to 3 fractions (train, validation,
// test). Each part gets floor(f * N) rows; when the fractions sum to 1 the
// last requested part takes the remainder. Missing parts are empty.
Split split(const MultiViewDataset& data, std::span<const double> fractions, std::uint64_t seed);

}  // namespace dicca::data
