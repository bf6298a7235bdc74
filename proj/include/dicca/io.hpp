#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dicca/data.hpp"
#include "dicca/dataset.hpp"
#include "dicca/metrics.hpp"
#include "dicca/model.hpp"
#include "dicca/optim.hpp"

namespace dicca::io {

using Json = nlohmann::json;

inline constexpr std::string_view kModelMagic = "dicca-model-v1";

// Fields missing from `j` keep their value in `base`. Unknown keys and wrong
// types throw InvalidConfig naming the field.
Json config_to_json(const model::DiccaConfig& c);
model::DiccaConfig config_from_json(const Json& j, const model::DiccaConfig& base = {});

// ---- model container -------------------------------------------------------
//
//   line 1: dicca-model-v1
//   line 2: JSON header {"format", "config", "blocks": [{"path", "size"}...],
//           "param_count", "dtype": "float64", "byte_order": "little"}
//   then param_count little-endian float64 values in block order.

std::string serialize_model(const model::DiccaParams& params, const model::DiccaConfig& config);
void save_model(const model::DiccaParams& params, const model::DiccaConfig& config, const std::string& path);

struct LoadedModel {
    model::DiccaParams params;
    model::DiccaConfig config;
};

// Header problems (bad magic, dims that disagree with the blocks, wrong
// payload length) are detected before any block is read.
LoadedModel parse_model(std::string_view bytes);
LoadedModel load_model(const std::string& path);

// ---- dataset manifest ------------------------------------------------------

struct ManifestEntry {
    std::string name;
    std::string path;    // relative paths resolve against the manifest's directory
    std::string format;  // "csv" or "idx"
    friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct DatasetManifest {
    std::vector<ManifestEntry> views;
    std::optional<ManifestEntry> labels;
    bool standardize = false;
    std::string provenance;
    friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

Json manifest_to_json(const DatasetManifest& m);
DatasetManifest manifest_from_json(const Json& j);
void save_manifest(const DatasetManifest& m, const std::string& path);
DatasetManifest load_manifest(const std::string& path);

// Reads every file the manifest names (FormatError on problems), checks the
// dataset invariants and standardizes when asked.
MultiViewDataset load_dataset(const DatasetManifest& m, const std::string& base_dir);
MultiViewDataset load_dataset(const std::string& manifest_path);

// Writes one CSV per view (and labels) plus the manifest into `dir`.
DatasetManifest write_dataset(const MultiViewDataset& data, const std::string& dir,
                              const std::string& manifest_name = "manifest.json");

// ---- text outputs ----------------------------------------------------------

// Shortest representation that reads back to the same double.
std::string format_double(double v);

std::string matrix_to_csv(const Matrix& a, const std::vector<std::string>& header);
void write_text(const std::string& path, std::string_view text);

Json report_to_json(const optim::TrainReport& r, bool include_timing = true);
Json parts_to_json(const model::ElboParts& p);

Json truth_to_json(const data::PlantedTruth& t);
data::PlantedTruth truth_from_json(const Json& j);

Json matrix_to_json(const Matrix& a);
Matrix matrix_from_json(const Json& j, const std::string& field);

}  // namespace dicca::io
