#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dicca/dataset.hpp"
#include "dicca/model.hpp"

namespace dicca::optim {

// Block soft-thresholding, the proximal map of threshold * ||.||_2:
// v / ||v|| * max(||v|| - threshold, 0). Returns exact zeros when
// ||v|| <= threshold and v itself when threshold == 0.
Vector prox_group(std::span<const double> v, double threshold);

// Applies prox_group to every column in place; returns how many columns are
// exactly zero afterwards.
std::size_t prox_columns(Matrix& a, double threshold);

std::size_t count_zero_columns(const Matrix& a);

struct ProxConfig {
    double lr_w = 1e-4;
    double lambda = 1.0;  // must equal the model's lambda
    void validate() const;
};

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    void validate() const;
};

class AdamState {
public:
    AdamState(AdamConfig config, std::vector<std::size_t> block_sizes);

    const AdamConfig& config() const noexcept { return config_; }
    std::uint64_t step() const noexcept { return step_; }

    // One bias-corrected step minimising along `grads`. All gradients are
    // checked before anything is written; a non-finite entry throws
    // NonFiniteGradient naming the block (paths[i] when given).
    void update(std::span<const std::span<double>> params, std::span<const std::span<const double>> grads,
                std::span<const std::string> paths = {});

private:
    AdamConfig config_;
    std::vector<Vector> m_;
    std::vector<Vector> v_;
    std::uint64_t step_ = 0;
};

inline void adam_step(AdamState& state, std::span<const std::span<double>> params,
                      std::span<const std::span<const double>> grads, std::span<const std::string> paths = {}) {
    state.update(params, grads, paths);
}

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    double elbo = 0.0;      // sample-weighted mean of the batch objectives
    model::ElboParts parts;
    std::vector<std::size_t> zero_shared;   // per view, exactly-zero columns of lambda
    std::vector<std::size_t> zero_private;  // per view, exactly-zero columns of W
    double seconds = 0.0;
};

struct TrainReport {
    std::vector<EpochRecord> epochs;
    std::vector<std::size_t> final_zero_shared;
    std::vector<std::size_t> final_zero_private;
    std::uint64_t steps = 0;

    // Mean of the last `window` epoch ELBOs ending at 1-based epoch `at`.
    double moving_average(std::size_t at, std::size_t window) const;
};

struct TrainOptions {
    ProxConfig prox;
    AdamConfig adam;
    std::size_t epochs = 100;
    std::size_t batch_size = 128;
    std::uint64_t seed = 0;
    std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainResult {
    model::DiccaParams params;
    TrainReport report;
};

// Maximises the collapsed objective. Each minibatch: gradient at one noise
// draw; Adam on generators, encoders and log_psi; a plain ascent step of size
// lr_w on every lambda/W followed by prox_columns with threshold lr_w * lambda.
// Shuffling, noise and initialisation derive from the seed only.
TrainResult train(const MultiViewDataset& data, const model::DiccaConfig& config, const TrainOptions& options,
                  std::optional<model::DiccaParams> initial = std::nullopt);

}  // namespace dicca::optim
