#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dicca/dataset.hpp"
#include "dicca/model.hpp"

namespace dicca::metrics {

// Per-view mean squared error of the posterior-mean reconstruction over all
// entries. The seed is reserved for a sampled variant and currently unused.
Vector reconstruction_mse(const model::DiccaConfig& config, const model::DiccaParams& params,
                          const MultiViewDataset& data, std::uint64_t seed = 0);

// Per-view 1 - sum (x - x_hat)^2 / sum x^2. An all-zero view throws DegenerateView.
Vector variance_explained_r2(const model::DiccaConfig& config, const model::DiccaParams& params,
                             const MultiViewDataset& data);

// Column 2-norms of lambda (M x K) and W (M x max K_m, missing cells 0).
struct GroupDependency {
    Matrix shared;
    Matrix priv;
    double shared_max = 0.0;
    double private_max = 0.0;

    // Entries divided by the per-matrix max; an all-zero matrix stays zero.
    Matrix normalized_shared() const;
    Matrix normalized_private() const;
};

GroupDependency group_dependency(const model::DiccaParams& params);

enum class Which { shared, priv };

struct Loading {
    std::size_t feature = 0;  // 1-based
    double magnitude = 0.0;
    friend bool operator==(const Loading&, const Loading&) = default;
};

// Features ranked by the absolute per-feature influence of one latent column.
// When h_m != d_m the column is first mapped through the generator's first
// affine layer. Ties keep ascending feature order.
std::vector<Loading> top_features(const model::DiccaConfig& config, const model::DiccaParams& params,
                                  std::size_t view, std::size_t latent_dim, std::size_t n, Which which);

// Active-column masks, per view.
struct SupportMask {
    std::vector<std::vector<bool>> shared;
    std::vector<std::vector<bool>> priv;
    friend bool operator==(const SupportMask&, const SupportMask&) = default;
};

// F1 of column activity over every cell of both masks; 1.0 when neither mask
// has an active column.
double support_f1(const SupportMask& estimated, const SupportMask& truth);

// Column active iff its 2-norm exceeds tau.
SupportMask mask_from_params(const model::DiccaParams& params, double tau = 0.0);

// Latent dimensions are identified only up to permutation. These helpers
// match estimated dimensions to reference ones before masks are compared.

// perm maximising sum_i score(i, perm[i]) for a square score matrix (rows:
// reference dims, columns: estimated dims). Exhaustive up to 8 dims, greedy
// beyond.
std::vector<std::size_t> best_assignment(const Matrix& score);

// score(i, j) = sum over views of |cos| between reference column i and
// estimated column j; zero columns contribute 0.
Matrix loading_similarity(std::span<const Matrix> reference, std::span<const Matrix> estimate);

// score(i, j) = |Pearson correlation| between reference latent i and
// estimated latent j over the rows (constant columns score 0).
Matrix latent_similarity(const Matrix& reference, const Matrix& estimate);

// Column i of the result is column perm[i] of the input, in every view.
std::vector<std::vector<bool>> permute_columns(const std::vector<std::vector<bool>>& mask,
                                               const std::vector<std::size_t>& perm);

}  // namespace dicca::metrics
