#include "dicca/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include "dicca/errors.hpp"
#include "dicca/kernels.hpp"
#include "dicca/random.hpp"

namespace dicca::data {

namespace {

constexpr std::uint64_t kDirectionTag = 0x5144;
constexpr std::uint64_t kNoiseTag = 0x4E53;

std::vector<std::vector<bool>> resolve_mask(const std::vector<std::vector<bool>>& mask, std::size_t views,
                                            const std::vector<std::size_t>& widths, const char* what) {
    if (mask.empty()) {
        std::vector<std::vector<bool>> out;
        for (std::size_t m = 0; m < views; ++m) out.emplace_back(widths[m], true);
        return out;
    }
    if (mask.size() != views) throw InvalidStructure(std::string(what) + " mask needs one row per view");
    for (std::size_t m = 0; m < views; ++m)
        if (mask[m].size() != widths[m])
            throw InvalidStructure(std::string(what) + " mask row " + std::to_string(m) + " has " +
                                   std::to_string(mask[m].size()) + " entries, expected " + std::to_string(widths[m]));
    return mask;
}

Matrix planted_matrix(std::size_t rows, const std::vector<bool>& active, double scale, Rng& rng) {
    Matrix a(rows, active.size());
    for (std::size_t j = 0; j < active.size(); ++j) {
        Vector col(rows);
        double norm = 0.0;
        do {
            norm = 0.0;
            for (double& v : col) {
                v = rng.normal();
                norm += v * v;
            }
        } while (norm == 0.0);
        if (!active[j]) continue;
        norm = std::sqrt(norm);
        for (double& v : col) v *= scale / norm;
        a.set_column(j, col);
    }
    return a;
}

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset) {
    if (offset + 4 > bytes.size())
        throw FormatError("idx: unexpected end of data at byte offset " + std::to_string(offset));
    return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
           (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void check_magic(std::span<const std::uint8_t> bytes, std::uint32_t expected) {
    const std::uint32_t magic = read_be32(bytes, 0);
    if (magic != expected) {
        std::ostringstream s;
        s << "idx: bad magic 0x" << std::hex << magic << " at byte offset 0 (expected 0x" << expected << ")";
        throw FormatError(s.str());
    }
}

void check_payload(std::span<const std::uint8_t> bytes, std::size_t offset, std::size_t count) {
    if (bytes.size() < offset + count)
        throw FormatError("idx: truncated payload at byte offset " + std::to_string(bytes.size()) + ", expected " +
                          std::to_string(offset + count) + " bytes");
    if (bytes.size() > offset + count)
        throw FormatError("idx: trailing data at byte offset " + std::to_string(offset + count));
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return s;
}

std::vector<std::string_view> split_line(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        cells.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return cells;
}

bool parse_double(std::string_view cell, double& out) {
    if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
    if (cell.empty()) return false;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
    return ec == std::errc() && ptr == cell.data() + cell.size() && std::isfinite(out);
}

std::vector<std::string_view> lines_of(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        lines.push_back(text.substr(start, end - start));
        start = end + 1;
    }
    while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
    return lines;
}

}  // namespace

std::string_view to_string(SyntheticGenerator g) { return g == SyntheticGenerator::linear ? "linear" : "tanh"; }

SyntheticGenerator synthetic_generator_from_string(std::string_view s) {
    if (s == "linear") return SyntheticGenerator::linear;
    if (s == "tanh") return SyntheticGenerator::tanh;
    throw InvalidConfig("generator: unknown synthetic generator '" + std::string(s) + "'");
}

std::pair<MultiViewDataset, PlantedTruth> make_synthetic(const model::DiccaConfig& config, const SyntheticSpec& spec,
                                                         std::size_t n, std::uint64_t seed) {
    const std::size_t views = config.views();
    if (views == 0) throw InvalidConfig("dims: at least one view is required");
    if (n < 2) throw InvalidConfig("n: at least 2 samples are required");
    if (config.k_private.size() != views) throw InvalidConfig("k_private: one entry per view is required");
    for (std::size_t m = 0; m < views; ++m)
        if (config.dims[m] == 0) throw InvalidConfig("dims: view " + std::to_string(m) + " has no features");
    if (!(spec.shared_scale > 0.0) || !(spec.private_scale > 0.0))
        throw InvalidConfig("scale: column scales must be positive");

    PlantedTruth t;
    t.shared_mask = resolve_mask(spec.shared_mask, views, std::vector<std::size_t>(views, config.k_shared), "shared");
    t.private_mask = resolve_mask(spec.private_mask, views, config.k_private, "private");
    for (std::size_t m = 0; m < views; ++m) {
        const bool any = std::ranges::any_of(t.shared_mask[m], [](bool b) { return b; }) ||
                         std::ranges::any_of(t.private_mask[m], [](bool b) { return b; });
        if (!any) throw InvalidStructure("view " + std::to_string(m) + " has no active latent column");
    }
    t.generator = spec.generator;
    t.noise_std = spec.noise_std.empty() ? Vector(views, 0.1) : spec.noise_std;
    if (t.noise_std.size() != views) throw InvalidConfig("noise_std: one entry per view is required");
    for (double s : t.noise_std)
        if (!(s >= 0.0) || !std::isfinite(s)) throw InvalidConfig("noise_std: entries must be finite and >= 0");

    for (std::size_t m = 0; m < views; ++m) {
        Rng rng(mix_seed(seed, {kDirectionTag, m}));
        t.lambda_mats.push_back(planted_matrix(config.dims[m], t.shared_mask[m], spec.shared_scale, rng));
        t.w_mats.push_back(planted_matrix(config.dims[m], t.private_mask[m], spec.private_scale, rng));
    }
    Rng zr(seed, 0);
    t.z = zr.normal_matrix(n, config.k_shared);
    for (std::size_t m = 0; m < views; ++m) {
        Rng pr(seed, 1 + m);
        t.z_privates.push_back(pr.normal_matrix(n, config.k_private[m]));
    }

    MultiViewDataset d;
    d.views = planted_views(t, t.z, t.z_privates, seed);
    for (std::size_t m = 0; m < views; ++m) d.view_names.push_back("view" + std::to_string(m + 1));
    d.provenance = "synthetic generator=" + std::string(to_string(t.generator)) + " n=" + std::to_string(n) +
                   " seed=" + std::to_string(seed);
    return {std::move(d), std::move(t)};
}

std::vector<Matrix> planted_views(const PlantedTruth& t, const Matrix& z, std::span<const Matrix> z_privates,
                                  std::uint64_t seed) {
    const std::size_t views = t.lambda_mats.size();
    if (z_privates.size() != views) throw ShapeMismatch("planted_views: one private latent per view expected");
    std::vector<Matrix> out;
    for (std::size_t m = 0; m < views; ++m) {
        Matrix x = kernels::matmul_nt(z, t.lambda_mats[m]);
        x += kernels::matmul_nt(z_privates[m], t.w_mats[m]);
        if (t.generator == SyntheticGenerator::tanh)
            for (double& v : x.values()) v = std::tanh(v);
        Rng noise(mix_seed(seed, {kNoiseTag}), m);
        for (double& v : x.values()) v += t.noise_std[m] * noise.normal();
        out.push_back(std::move(x));
    }
    return out;
}

Vector rotate_image(std::span<const double> image, std::size_t side, double angle) {
    if (image.size() != side * side) throw ShapeMismatch("rotate_image: image is not side x side");
    const double c = 0.5 * (static_cast<double>(side) - 1.0);
    const double cs = std::cos(angle), sn = std::sin(angle);
    const auto s = static_cast<std::ptrdiff_t>(side);
    auto pixel = [&](std::ptrdiff_t r, std::ptrdiff_t col) {
        if (r < 0 || col < 0 || r >= s || col >= s) return 0.0;
        return image[static_cast<std::size_t>(r * s + col)];
    };
    Vector out(image.size(), 0.0);
    for (std::ptrdiff_t r = 0; r < s; ++r) {
        for (std::ptrdiff_t col = 0; col < s; ++col) {
            // Inverse map: the output pixel samples the input rotated back by angle.
            const double dx = static_cast<double>(col) - c, dy = static_cast<double>(r) - c;
            const double sx = cs * dx + sn * dy + c;
            const double sy = -sn * dx + cs * dy + c;
            const double fx = std::floor(sx), fy = std::floor(sy);
            const double ax = sx - fx, ay = sy - fy;
            const auto x0 = static_cast<std::ptrdiff_t>(fx), y0 = static_cast<std::ptrdiff_t>(fy);
            double v = (1.0 - ay) * ((1.0 - ax) * pixel(y0, x0) + (ax == 0.0 ? 0.0 : ax * pixel(y0, x0 + 1)));
            if (ay != 0.0) v += ay * ((1.0 - ax) * pixel(y0 + 1, x0) + (ax == 0.0 ? 0.0 : ax * pixel(y0 + 1, x0 + 1)));
            out[static_cast<std::size_t>(r * s + col)] = v;
        }
    }
    return out;
}

MultiViewDataset make_noisy_two_view(const Matrix& images, const std::vector<int>& labels, std::uint64_t seed,
                                     const TwoViewOptions& options) {
    const std::size_t n = images.rows();
    if (labels.size() != n) throw ShapeMismatch("make_noisy_two_view: one label per image is required");
    const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(images.cols()))));
    if (side * side != images.cols() || side == 0) throw ShapeMismatch("make_noisy_two_view: images must be square");
    for (double v : images.values())
        if (!(v >= 0.0 && v <= 1.0)) throw InvalidMatrix("make_noisy_two_view: pixel values must lie in [0, 1]");
    if (!(options.max_angle >= 0.0) || !std::isfinite(options.max_angle))
        throw InvalidConfig("max_angle must be finite and >= 0");

    std::map<int, std::vector<std::size_t>> by_label;
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] < 0 || labels[i] > 9) throw InvalidIndex("label " + std::to_string(labels[i]) + " outside 0..9");
        by_label[labels[i]].push_back(i);
    }

    Rng angles(seed, 1), partners(seed, 2), noise(seed, 3);
    Matrix v1(n, images.cols()), v2(n, images.cols());
    std::size_t self_pairs = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double angle = angles.uniform(-options.max_angle, options.max_angle);
        std::ranges::copy(rotate_image(images.row(i), side, angle), v1.row(i).begin());

        const auto& pool = by_label[labels[i]];
        std::size_t partner = i;
        if (pool.size() > 1) {
            // Uniform over the pool minus the sample itself.
            const std::size_t own = static_cast<std::size_t>(std::ranges::find(pool, i) - pool.begin());
            std::size_t k = partners.below(pool.size() - 1);
            if (k >= own) ++k;
            partner = pool[k];
        } else {
            ++self_pairs;
        }
        const auto src = images.row(partner);
        auto dst = v2.row(i);
        for (std::size_t p = 0; p < src.size(); ++p) dst[p] = std::min(1.0, src[p] + noise.uniform());
    }

    MultiViewDataset d;
    d.views = {std::move(v1), std::move(v2)};
    d.labels = labels;
    d.view_names = {"rotated", "noisy"};
    std::ostringstream prov;
    prov << "noisy-two-view seed=" << seed << " max_angle=" << options.max_angle
         << " rotation=bilinear-zero-fill noise=additive-uniform(0,1)-clipped self_pairs=" << self_pairs;
    d.provenance = prov.str();
    return d;
}

Matrix parse_csv(std::string_view text, const std::string& source) {
    const auto lines = lines_of(text);
    std::size_t first = 0;
    if (!lines.empty()) {
        double tmp = 0.0;
        const auto cells = split_line(lines[0]);
        if (std::ranges::any_of(cells, [&](std::string_view c) { return !parse_double(c, tmp); })) first = 1;
    }
    if (first >= lines.size()) throw FormatError(source + ": no data rows");
    const std::size_t cols = split_line(lines[first]).size();
    Matrix out(lines.size() - first, cols);
    for (std::size_t r = first; r < lines.size(); ++r) {
        const auto cells = split_line(lines[r]);
        if (cells.size() != cols)
            throw FormatError(source + ": row " + std::to_string(r + 1) + " has " + std::to_string(cells.size()) +
                              " cells, expected " + std::to_string(cols));
        for (std::size_t c = 0; c < cols; ++c) {
            double v = 0.0;
            if (!parse_double(cells[c], v))
                throw FormatError(source + ": non-numeric cell at row " + std::to_string(r + 1) + ", col " +
                                  std::to_string(c + 1) + ": '" + std::string(cells[c]) + "'");
            out(r - first, c) = v;
        }
    }
    return out;
}

Matrix load_csv_view(const std::string& path) { return parse_csv(read_file_text(path), path); }

std::vector<int> load_csv_labels(const std::string& path) {
    const Matrix m = parse_csv(read_file_text(path), path);
    if (m.cols() != 1) throw FormatError(path + ": labels need exactly one column");
    std::vector<int> out;
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const double v = m(r, 0);
        if (v != std::round(v) || std::abs(v) > 1e9)
            throw FormatError(path + ": label at row " + std::to_string(r + 1) + " is not an integer");
        out.push_back(static_cast<int>(v));
    }
    return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(path + ": cannot open file");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string read_file_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(path + ": cannot open file");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Matrix parse_idx_images(std::span<const std::uint8_t> bytes) {
    check_magic(bytes, 0x00000803);
    const std::size_t n = read_be32(bytes, 4), rows = read_be32(bytes, 8), cols = read_be32(bytes, 12);
    if (rows == 0 || cols == 0) throw FormatError("idx: zero image dimension at byte offset 8");
    check_payload(bytes, 16, n * rows * cols);
    Matrix out(n, rows * cols);
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = static_cast<double>(bytes[16 + i]) / 255.0;
    return out;
}

std::vector<int> parse_idx_labels(std::span<const std::uint8_t> bytes) {
    check_magic(bytes, 0x00000801);
    const std::size_t n = read_be32(bytes, 4);
    check_payload(bytes, 8, n);
    return {bytes.begin() + 8, bytes.end()};
}

Matrix load_idx_images(const std::string& path) {
    const auto bytes = read_file_bytes(path);
    try {
        return parse_idx_images(bytes);
    } catch (const FormatError& e) {
        throw FormatError(path + ": " + e.what());
    }
}

std::vector<int> load_idx_labels(const std::string& path) {
    const auto bytes = read_file_bytes(path);
    try {
        return parse_idx_labels(bytes);
    } catch (const FormatError& e) {
        throw FormatError(path + ": " + e.what());
    }
}

Standardized standardize(const MultiViewDataset& data) {
    data.validate();
    const std::size_t n = data.samples();
    if (n < 2) throw InvalidConfig("standardize: at least 2 samples are required");
    Standardized out{data, {}};
    for (auto& x : out.data.views) {
        Vector mean(x.cols(), 0.0), scale(x.cols(), 1.0);
        std::vector<bool> constant(x.cols(), false);
        for (std::size_t j = 0; j < x.cols(); ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += x(i, j);
            mean[j] = s / static_cast<double>(n);
            double ss = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double d = x(i, j) - mean[j];
                ss += d * d;
            }
            const double sd = std::sqrt(ss / static_cast<double>(n));
            if (sd <= 1e-12 * std::max(1.0, std::abs(mean[j]))) {
                constant[j] = true;
            } else {
                scale[j] = sd;
            }
            for (std::size_t i = 0; i < n; ++i) x(i, j) = (x(i, j) - mean[j]) / scale[j];
        }
        out.stats.mean.push_back(std::move(mean));
        out.stats.scale.push_back(std::move(scale));
        out.stats.constant.push_back(std::move(constant));
    }
    return out;
}

Split split(const MultiViewDataset& data, std::span<const double> fractions, std::uint64_t seed) {
    data.validate();
    if (fractions.empty() || fractions.size() > 3) throw InvalidSplit("split: between 1 and 3 fractions are required");
    double total = 0.0;
    for (double f : fractions) {
        if (!(f > 0.0) || !std::isfinite(f)) throw InvalidSplit("split: fractions must be positive");
        total += f;
    }
    if (total > 1.0 + 1e-12) throw InvalidSplit("split: fractions sum to more than 1");
    const std::size_t n = data.samples();
    std::vector<std::size_t> sizes;
    std::size_t used = 0;
    for (double f : fractions) {
        sizes.push_back(static_cast<std::size_t>(std::floor(f * static_cast<double>(n) + 1e-9)));
        used += sizes.back();
    }
    if (std::abs(total - 1.0) <= 1e-12) {
        sizes.back() += n - used;
    }
    for (std::size_t i = 0; i < sizes.size(); ++i)
        if (sizes[i] == 0) throw InvalidSplit("split: part " + std::to_string(i) + " would be empty");

    Rng rng(seed, 0);
    const auto order = permutation(n, rng);
    Split s;
    std::vector<std::size_t>* parts[3] = {&s.train_rows, &s.validation_rows, &s.test_rows};
    std::size_t at = 0;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        parts[i]->assign(order.begin() + static_cast<std::ptrdiff_t>(at),
                         order.begin() + static_cast<std::ptrdiff_t>(at + sizes[i]));
        at += sizes[i];
    }
    s.train = data.subset(s.train_rows);
    s.validation = data.subset(s.validation_rows);
    s.test = data.subset(s.test_rows);
    return s;
}

}  // namespace dicca::data
