#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dicca/data.hpp"
#include "dicca/io.hpp"
#include "dicca/model.hpp"
#include "dicca/optim.hpp"

namespace dicca::cli {

enum ExitCode : int {
    kOk = 0,
    kFailure = 1,
    kConfigError = 2,
    kFormatError = 3,
    kDiverged = 4,
    kShapeError = 5,
};

struct TrainSettings {
    std::size_t epochs = 100;
    std::size_t batch_size = 128;
    double lr = 1e-4;
    double lr_w = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::uint64_t seed = 0;
};

struct SimulateSettings {
    std::size_t n = 1000;
    data::SyntheticSpec spec;
};

// The complete run description, read from one JSON file:
//
//   {
//     "architecture": "appendix" | "linear" | "identity" | "mlp",
//     "hidden": [128],                       // widths for the mlp template
//     "model":    { DiccaConfig fields, overriding the template },
//     "train":    { "epochs", "batch_size", "lr", "lr_w", "beta1", "beta2", "eps", "seed" },
//     "data":     "path/to/manifest.json",   // optional, relative to the config file
//     "ablation": { "disable_private": false, "lambda_zero": false },
//     "simulate": { "n", "generator", "noise_std", "shared_mask", "private_mask",
//                   "shared_scale", "private_scale" }
//   }
struct RunConfig {
    std::string architecture = "appendix";
    std::vector<std::size_t> hidden{128};
    model::DiccaConfig model;
    TrainSettings train;
    std::string data;
    bool disable_private = false;
    bool lambda_zero = false;
    std::optional<SimulateSettings> simulate;

    // Model config with the data dims filled in and the ablations applied.
    model::DiccaConfig effective_model(const std::vector<std::size_t>& dims) const;
    optim::TrainOptions train_options(const model::DiccaConfig& effective) const;

    // Field-level InvalidConfig. Pass the data dims when they are known.
    void validate(const std::vector<std::size_t>& dims = {}) const;
};

RunConfig run_config_from_json(const io::Json& j, const std::string& base_dir = "");
RunConfig load_run_config(const std::string& path);

struct SimulateArgs {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
};

struct Mnist2ViewArgs {
    std::string images;
    std::string labels;
    std::string out;
    std::uint64_t seed = 0;
    std::optional<std::size_t> subset;
    std::optional<double> max_angle;
};

struct FitArgs {
    std::string data;  // manifest; falls back to the config's "data" field
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> epochs;
    std::optional<double> lambda;
    bool disable_private = false;
    bool lambda_zero = false;
    bool quiet = false;
};

struct EvalArgs {
    std::string model;
    std::string data;
    std::vector<std::string> metrics{"mse", "r2", "heatmap"};
    std::string truth;
    std::string out;
};

struct TransformArgs {
    std::string model;
    std::string data;
    std::string out;
    std::string which = "shared";
};

// Each command throws dicca errors; run() maps them to exit codes.
void cmd_simulate(const SimulateArgs& args);
void cmd_mnist2view(const Mnist2ViewArgs& args);
optim::TrainReport cmd_fit(const FitArgs& args);
void cmd_eval(const EvalArgs& args);
void cmd_transform(const TransformArgs& args);

// White to dark blue heatmap of a matrix with entries in [0, 1].
std::string heatmap_svg(const Matrix& shared, const Matrix& priv);

// Parses argv, runs one subcommand, and returns the process exit code.
// DICCA_THREADS caps the kernel thread count.
int run(int argc, char** argv);

}  // namespace dicca::cli
