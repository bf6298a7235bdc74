#include "dicca/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>

#include "dicca/errors.hpp"

namespace dicca::io {

namespace fs = std::filesystem;

namespace {

template <class T>
T get_field(const Json& j, const char* key, const T& fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw InvalidConfig(std::string(key) + ": wrong type");
    }
}

void reject_unknown(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) throw InvalidConfig(where + ": expected an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, v] : j.items())
        if (!ok.contains(k)) throw InvalidConfig(where + ": unknown field '" + k + "'");
}

std::uint64_t to_le(std::uint64_t v) {
    if constexpr (std::endian::native == std::endian::little) {
        return v;
    } else {
        std::uint64_t r = 0;
        for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xFF) << (8 * (7 - i));
        return r;
    }
}

std::vector<std::pair<std::string, std::size_t>> block_layout(const model::DiccaParams& p) {
    std::vector<std::pair<std::string, std::size_t>> out;
    p.for_each_block(
        [&](const std::string& path, std::span<const double> b, model::ParamGroup) { out.emplace_back(path, b.size()); });
    return out;
}

Json entry_to_json(const ManifestEntry& e) { return Json{{"name", e.name}, {"path", e.path}, {"format", e.format}}; }

ManifestEntry entry_from_json(const Json& j, const std::string& where) {
    if (!j.is_object()) throw FormatError(where + ": expected an object");
    ManifestEntry e;
    try {
        e.name = j.value("name", std::string());
        e.path = j.at("path").get<std::string>();
        e.format = j.value("format", std::string("csv"));
    } catch (const nlohmann::json::exception&) {
        throw FormatError(where + ": 'path' is required and fields must be strings");
    }
    if (e.format != "csv" && e.format != "idx") throw FormatError(where + ": format must be csv or idx");
    return e;
}

std::string resolve(const std::string& base, const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() || base.empty() ? p : (fs::path(base) / path).string();
}

Json bool_rows(const std::vector<std::vector<bool>>& rows) {
    Json j = Json::array();
    for (const auto& r : rows) {
        Json row = Json::array();
        for (bool b : r) row.push_back(b);
        j.push_back(row);
    }
    return j;
}

}  // namespace

Json config_to_json(const model::DiccaConfig& c) {
    return Json{{"dims", c.dims},
                {"k_shared", c.k_shared},
                {"k_private", c.k_private},
                {"gen_input_dims", c.gen_input_dims},
                {"lambda", c.lambda},
                {"mc_samples", c.mc_samples},
                {"disable_private", c.disable_private},
                {"fusion", model::to_string(c.fusion)},
                {"encoder", model::to_string(c.encoder)},
                {"encoder_hidden", c.encoder_hidden},
                {"decoder", model::to_string(c.decoder)},
                {"decoder_hidden", c.decoder_hidden},
                {"std_head", model::to_string(c.std_head)}};
}

model::DiccaConfig config_from_json(const Json& j, const model::DiccaConfig& base) {
    reject_unknown(j,
                   {"dims", "k_shared", "k_private", "gen_input_dims", "lambda", "mc_samples", "disable_private",
                    "fusion", "encoder", "encoder_hidden", "decoder", "decoder_hidden", "std_head"},
                   "model");
    model::DiccaConfig c = base;
    using Sizes = std::vector<std::size_t>;
    c.dims = get_field<Sizes>(j, "dims", c.dims);
    c.k_shared = get_field<std::size_t>(j, "k_shared", c.k_shared);
    c.k_private = get_field<Sizes>(j, "k_private", c.k_private);
    c.gen_input_dims = get_field<Sizes>(j, "gen_input_dims", c.gen_input_dims);
    c.lambda = get_field<double>(j, "lambda", c.lambda);
    c.mc_samples = get_field<std::size_t>(j, "mc_samples", c.mc_samples);
    c.disable_private = get_field<bool>(j, "disable_private", c.disable_private);
    c.fusion = model::fusion_from_string(get_field<std::string>(j, "fusion", std::string(model::to_string(c.fusion))));
    c.encoder =
        model::encoder_arch_from_string(get_field<std::string>(j, "encoder", std::string(model::to_string(c.encoder))));
    c.encoder_hidden = get_field<Sizes>(j, "encoder_hidden", c.encoder_hidden);
    c.decoder =
        model::decoder_arch_from_string(get_field<std::string>(j, "decoder", std::string(model::to_string(c.decoder))));
    c.decoder_hidden = get_field<Sizes>(j, "decoder_hidden", c.decoder_hidden);
    c.std_head =
        model::std_head_from_string(get_field<std::string>(j, "std_head", std::string(model::to_string(c.std_head))));
    return c;
}

std::string serialize_model(const model::DiccaParams& params, const model::DiccaConfig& config) {
    const model::DiccaParams expected = model::make_params(config);
    const auto layout = block_layout(params);
    if (layout != block_layout(expected)) throw ShapeMismatch("save_model: parameters do not match the config");

    Json blocks = Json::array();
    std::size_t count = 0;
    for (const auto& [path, size] : layout) {
        blocks.push_back(Json{{"path", path}, {"size", size}});
        count += size;
    }
    const Json header{{"format", kModelMagic},   {"config", config_to_json(config)}, {"blocks", blocks},
                      {"param_count", count},    {"dtype", "float64"},               {"byte_order", "little"}};
    std::string out(kModelMagic);
    out += '\n';
    out += header.dump();
    out += '\n';
    const std::size_t start = out.size();
    out.resize(start + 8 * count);
    std::size_t at = start;
    params.for_each_block([&](const std::string&, std::span<const double> b, model::ParamGroup) {
        for (double v : b) {
            const std::uint64_t bits = to_le(std::bit_cast<std::uint64_t>(v));
            std::memcpy(out.data() + at, &bits, 8);
            at += 8;
        }
    });
    return out;
}

void save_model(const model::DiccaParams& params, const model::DiccaConfig& config, const std::string& path) {
    write_text(path, serialize_model(params, config));
}

LoadedModel parse_model(std::string_view bytes) {
    const std::size_t nl1 = bytes.find('\n');
    if (nl1 == std::string_view::npos) throw FormatError("model: missing header line");
    const std::string_view magic = bytes.substr(0, nl1);
    if (magic != kModelMagic) {
        if (magic.starts_with("dicca-model-v"))
            throw UnsupportedVersion("model: unsupported container version '" + std::string(magic) + "'");
        throw FormatError("model: not a dicca model file");
    }
    const std::size_t nl2 = bytes.find('\n', nl1 + 1);
    if (nl2 == std::string_view::npos) throw FormatError("model: truncated header");
    Json header;
    try {
        header = Json::parse(bytes.substr(nl1 + 1, nl2 - nl1 - 1));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("model: malformed header: ") + e.what());
    }

    LoadedModel out;
    std::size_t declared = 0;
    std::vector<std::pair<std::string, std::size_t>> layout;
    try {
        if (header.at("format").get<std::string>() != kModelMagic) throw FormatError("model: header format mismatch");
        if (header.at("dtype").get<std::string>() != "float64" || header.at("byte_order").get<std::string>() != "little")
            throw FormatError("model: unsupported value encoding");
        out.config = config_from_json(header.at("config"));
        declared = header.at("param_count").get<std::size_t>();
        for (const auto& b : header.at("blocks")) layout.emplace_back(b.at("path").get<std::string>(), b.at("size").get<std::size_t>());
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("model: incomplete header: ") + e.what());
    } catch (const InvalidConfig& e) {
        throw FormatError(std::string("model: invalid config in header: ") + e.what());
    }
    try {
        out.params = model::make_params(out.config);
    } catch (const InvalidConfig& e) {
        throw FormatError(std::string("model: invalid config in header: ") + e.what());
    }
    if (block_layout(out.params) != layout) throw FormatError("model: header dimensions disagree with the block list");
    if (out.params.param_count() != declared) throw FormatError("model: param_count disagrees with the block list");
    const std::size_t payload = bytes.size() - (nl2 + 1);
    if (payload != 8 * declared)
        throw FormatError("model: payload has " + std::to_string(payload) + " bytes, expected " +
                          std::to_string(8 * declared));

    std::size_t at = nl2 + 1;
    out.params.for_each_block([&](const std::string&, std::span<double> b, model::ParamGroup) {
        for (double& v : b) {
            std::uint64_t bits = 0;
            std::memcpy(&bits, bytes.data() + at, 8);
            v = std::bit_cast<double>(to_le(bits));
            at += 8;
        }
    });
    return out;
}

LoadedModel load_model(const std::string& path) { return parse_model(data::read_file_text(path)); }

Json manifest_to_json(const DatasetManifest& m) {
    Json views = Json::array();
    for (const auto& v : m.views) views.push_back(entry_to_json(v));
    Json j{{"views", views}, {"standardize", m.standardize}, {"provenance", m.provenance}};
    if (m.labels) j["labels"] = entry_to_json(*m.labels);
    return j;
}

DatasetManifest manifest_from_json(const Json& j) {
    if (!j.is_object() || !j.contains("views") || !j.at("views").is_array())
        throw FormatError("manifest: 'views' array is required");
    DatasetManifest m;
    std::set<std::string> paths;
    for (std::size_t i = 0; i < j.at("views").size(); ++i) {
        m.views.push_back(entry_from_json(j.at("views")[i], "manifest views[" + std::to_string(i) + "]"));
        if (!paths.insert(m.views.back().path).second) throw FormatError("manifest: duplicate path " + m.views.back().path);
    }
    if (m.views.empty()) throw FormatError("manifest: at least one view is required");
    if (j.contains("labels") && !j.at("labels").is_null()) {
        m.labels = entry_from_json(j.at("labels"), "manifest labels");
        if (!paths.insert(m.labels->path).second) throw FormatError("manifest: duplicate path " + m.labels->path);
    }
    try {
        m.standardize = j.value("standardize", false);
        m.provenance = j.value("provenance", std::string());
    } catch (const nlohmann::json::exception&) {
        throw FormatError("manifest: 'standardize' must be a boolean and 'provenance' a string");
    }
    return m;
}

void save_manifest(const DatasetManifest& m, const std::string& path) {
    write_text(path, manifest_to_json(m).dump(2) + "\n");
}

DatasetManifest load_manifest(const std::string& path) {
    try {
        return manifest_from_json(Json::parse(data::read_file_text(path)));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path + ": malformed manifest: " + e.what());
    }
}

MultiViewDataset load_dataset(const DatasetManifest& m, const std::string& base_dir) {
    MultiViewDataset d;
    for (const auto& v : m.views) {
        const std::string p = resolve(base_dir, v.path);
        d.views.push_back(v.format == "idx" ? data::load_idx_images(p) : data::load_csv_view(p));
        d.view_names.push_back(v.name);
    }
    if (m.labels) {
        const std::string p = resolve(base_dir, m.labels->path);
        d.labels = m.labels->format == "idx" ? data::load_idx_labels(p) : data::load_csv_labels(p);
    }
    d.provenance = m.provenance;
    try {
        d.validate();
    } catch (const ShapeMismatch& e) {
        throw FormatError(std::string("manifest data: ") + e.what());
    }
    if (m.standardize) d = data::standardize(d).data;
    return d;
}

MultiViewDataset load_dataset(const std::string& manifest_path) {
    return load_dataset(load_manifest(manifest_path), fs::path(manifest_path).parent_path().string());
}

DatasetManifest write_dataset(const MultiViewDataset& data, const std::string& dir, const std::string& manifest_name) {
    data.validate();
    fs::create_directories(dir);
    DatasetManifest m;
    m.provenance = data.provenance;
    for (std::size_t v = 0; v < data.view_count(); ++v) {
        const std::string name = data.view_names.empty() ? "view" + std::to_string(v + 1) : data.view_names[v];
        const std::string file = "view" + std::to_string(v + 1) + ".csv";
        std::vector<std::string> header;
        for (std::size_t j = 0; j < data.views[v].cols(); ++j) header.push_back("f" + std::to_string(j + 1));
        write_text((fs::path(dir) / file).string(), matrix_to_csv(data.views[v], header));
        m.views.push_back({name, file, "csv"});
    }
    if (data.labels) {
        std::string text = "label\n";
        for (int l : *data.labels) text += std::to_string(l) + "\n";
        write_text((fs::path(dir) / "labels.csv").string(), text);
        m.labels = ManifestEntry{"labels", "labels.csv", "csv"};
    }
    save_manifest(m, (fs::path(dir) / manifest_name).string());
    return m;
}

std::string format_double(double v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string matrix_to_csv(const Matrix& a, const std::vector<std::string>& header) {
    std::string out;
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (j) out += ',';
        out += header[j];
    }
    if (!header.empty()) out += '\n';
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            if (j) out += ',';
            out += format_double(a(i, j));
        }
        out += '\n';
    }
    return out;
}

void write_text(const std::string& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError(path + ": cannot open for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw FormatError(path + ": write failed");
}

Json parts_to_json(const model::ElboParts& p) {
    return Json{{"reconstruction", p.reconstruction}, {"kl_shared", p.kl_shared},
                {"kl_private", p.kl_private},         {"theta_prior", p.theta_prior},
                {"penalty_shared", p.penalty_shared}, {"penalty_private", p.penalty_private}};
}

Json report_to_json(const optim::TrainReport& r, bool include_timing) {
    Json epochs = Json::array();
    for (const auto& e : r.epochs) {
        Json j{{"epoch", e.epoch},
               {"elbo", e.elbo},
               {"parts", parts_to_json(e.parts)},
               {"zero_shared", e.zero_shared},
               {"zero_private", e.zero_private}};
        if (include_timing) j["seconds"] = e.seconds;
        epochs.push_back(j);
    }
    return Json{{"epochs", epochs},
                {"steps", r.steps},
                {"final_zero_shared", r.final_zero_shared},
                {"final_zero_private", r.final_zero_private}};
}

Json matrix_to_json(const Matrix& a) {
    Json rows = Json::array();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const auto r = a.row(i);
        rows.push_back(std::vector<double>(r.begin(), r.end()));
    }
    return Json{{"rows", a.rows()}, {"cols", a.cols()}, {"data", rows}};
}

Matrix matrix_from_json(const Json& j, const std::string& field) {
    try {
        const std::size_t rows = j.at("rows").get<std::size_t>(), cols = j.at("cols").get<std::size_t>();
        Matrix a(rows, cols);
        const auto& data = j.at("data");
        if (data.size() != rows) throw FormatError(field + ": row count mismatch");
        for (std::size_t i = 0; i < rows; ++i) {
            const auto r = data[i].get<std::vector<double>>();
            if (r.size() != cols) throw FormatError(field + ": row " + std::to_string(i) + " has the wrong length");
            std::copy(r.begin(), r.end(), a.row(i).begin());
        }
        return a;
    } catch (const nlohmann::json::exception&) {
        throw FormatError(field + ": malformed matrix");
    }
}

Json truth_to_json(const data::PlantedTruth& t) {
    Json lam = Json::array(), w = Json::array();
    for (const auto& a : t.lambda_mats) lam.push_back(matrix_to_json(a));
    for (const auto& a : t.w_mats) w.push_back(matrix_to_json(a));
    return Json{{"shared_mask", bool_rows(t.shared_mask)},
                {"private_mask", bool_rows(t.private_mask)},
                {"lambda", lam},
                {"w", w},
                {"generator", data::to_string(t.generator)},
                {"noise_std", t.noise_std}};
}

data::PlantedTruth truth_from_json(const Json& j) {
    data::PlantedTruth t;
    try {
        t.shared_mask = j.at("shared_mask").get<std::vector<std::vector<bool>>>();
        t.private_mask = j.at("private_mask").get<std::vector<std::vector<bool>>>();
        for (std::size_t i = 0; i < j.at("lambda").size(); ++i)
            t.lambda_mats.push_back(matrix_from_json(j.at("lambda")[i], "lambda[" + std::to_string(i) + "]"));
        for (std::size_t i = 0; i < j.at("w").size(); ++i)
            t.w_mats.push_back(matrix_from_json(j.at("w")[i], "w[" + std::to_string(i) + "]"));
        t.generator = data::synthetic_generator_from_string(j.at("generator").get<std::string>());
        t.noise_std = j.at("noise_std").get<Vector>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("truth: malformed file: ") + e.what());
    }
    return t;
}

}  // namespace dicca::io
