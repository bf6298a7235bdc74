#include "dicca/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "dicca/errors.hpp"
#include "dicca/kernels.hpp"
#include "dicca/metrics.hpp"

namespace dicca::cli {

namespace fs = std::filesystem;
using io::Json;

namespace {

void reject_unknown(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) throw InvalidConfig(where + ": expected an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, v] : j.items())
        if (!ok.contains(k)) throw InvalidConfig(where + ": unknown field '" + k + "'");
}

template <class T>
void read_field(const Json& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw InvalidConfig(where + "." + key + ": wrong type");
    }
}

model::DiccaConfig architecture_template(const std::string& name, const std::vector<std::size_t>& hidden) {
    model::DiccaConfig c;
    if (name == "appendix") return c;
    if (name == "linear") {
        c.decoder = model::DecoderArch::linear;
    } else if (name == "identity") {
        c.decoder = model::DecoderArch::identity;
    } else if (name == "mlp") {
        c.encoder = model::EncoderArch::mlp;
        c.decoder = model::DecoderArch::mlp;
        c.encoder_hidden = hidden;
        c.decoder_hidden = hidden;
    } else {
        throw InvalidConfig("architecture: unknown template '" + name + "' (appendix, linear, identity, mlp)");
    }
    return c;
}

std::string join(const std::vector<std::size_t>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + std::to_string(v[i]);
    return s;
}

std::vector<std::size_t> view_dims(const MultiViewDataset& d) {
    std::vector<std::size_t> dims;
    for (const auto& v : d.views) dims.push_back(v.cols());
    return dims;
}

void check_dims(const model::DiccaConfig& c, const MultiViewDataset& d) {
    if (view_dims(d) != c.dims)
        throw ShapeMismatch("data view widths (" + join(view_dims(d)) + ") differ from the model (" + join(c.dims) + ")");
}

std::string resolve(const std::string& base, const std::string& p) {
    if (p.empty() || base.empty() || fs::path(p).is_absolute()) return p;
    return (fs::path(base) / p).string();
}

// Hex colour on the white -> dark blue ramp.
std::string ramp(double t) {
    t = std::clamp(t, 0.0, 1.0);
    const int r = static_cast<int>(std::lround(255.0 + t * (8.0 - 255.0)));
    const int g = static_cast<int>(std::lround(255.0 + t * (48.0 - 255.0)));
    const int b = static_cast<int>(std::lround(255.0 + t * (107.0 - 255.0)));
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
    return buf;
}

}  // namespace

model::DiccaConfig RunConfig::effective_model(const std::vector<std::size_t>& dims) const {
    model::DiccaConfig c = model;
    if (!dims.empty()) {
        if (!c.dims.empty() && c.dims != dims)
            throw ShapeMismatch("model.dims (" + join(c.dims) + ") differ from the data (" + join(dims) + ")");
        c.dims = dims;
    }
    if (c.k_private.empty()) c.k_private.assign(c.dims.size(), 10);
    if (disable_private) c.disable_private = true;
    if (lambda_zero) c.lambda = 0.0;
    return c;
}

optim::TrainOptions RunConfig::train_options(const model::DiccaConfig& effective) const {
    optim::TrainOptions o;
    o.epochs = train.epochs;
    o.batch_size = train.batch_size;
    o.seed = train.seed;
    o.adam = {train.lr, train.beta1, train.beta2, train.eps};
    o.prox = {train.lr_w, effective.lambda};
    return o;
}

void RunConfig::validate(const std::vector<std::size_t>& dims) const {
    const model::DiccaConfig c = effective_model(dims);
    if (!c.dims.empty()) c.validate();
    if (train.batch_size == 0) throw InvalidConfig("train.batch_size must be >= 1");
    const optim::TrainOptions o = train_options(c);
    o.adam.validate();
    o.prox.validate();
    if (simulate) {
        if (simulate->n < 2) throw InvalidConfig("simulate.n must be >= 2");
        if (c.dims.empty()) throw InvalidConfig("model.dims is required for simulate");
    }
}

RunConfig run_config_from_json(const Json& j, const std::string& base_dir) {
    reject_unknown(j, {"architecture", "hidden", "model", "train", "data", "ablation", "simulate"}, "config");
    RunConfig rc;
    read_field(j, "architecture", rc.architecture, "config");
    read_field(j, "hidden", rc.hidden, "config");
    rc.model = io::config_from_json(j.value("model", Json::object()), architecture_template(rc.architecture, rc.hidden));

    if (j.contains("train")) {
        const Json& t = j.at("train");
        reject_unknown(t, {"epochs", "batch_size", "lr", "lr_w", "beta1", "beta2", "eps", "seed"}, "train");
        read_field(t, "epochs", rc.train.epochs, "train");
        read_field(t, "batch_size", rc.train.batch_size, "train");
        read_field(t, "lr", rc.train.lr, "train");
        read_field(t, "lr_w", rc.train.lr_w, "train");
        read_field(t, "beta1", rc.train.beta1, "train");
        read_field(t, "beta2", rc.train.beta2, "train");
        read_field(t, "eps", rc.train.eps, "train");
        read_field(t, "seed", rc.train.seed, "train");
    }
    read_field(j, "data", rc.data, "config");
    rc.data = resolve(base_dir, rc.data);
    if (j.contains("ablation")) {
        const Json& a = j.at("ablation");
        reject_unknown(a, {"disable_private", "lambda_zero"}, "ablation");
        read_field(a, "disable_private", rc.disable_private, "ablation");
        read_field(a, "lambda_zero", rc.lambda_zero, "ablation");
    }
    if (j.contains("simulate")) {
        const Json& s = j.at("simulate");
        reject_unknown(s, {"n", "generator", "noise_std", "shared_mask", "private_mask", "shared_scale", "private_scale"},
                       "simulate");
        SimulateSettings sim;
        read_field(s, "n", sim.n, "simulate");
        std::string gen = "linear";
        read_field(s, "generator", gen, "simulate");
        sim.spec.generator = data::synthetic_generator_from_string(gen);
        read_field(s, "noise_std", sim.spec.noise_std, "simulate");
        read_field(s, "shared_mask", sim.spec.shared_mask, "simulate");
        read_field(s, "private_mask", sim.spec.private_mask, "simulate");
        read_field(s, "shared_scale", sim.spec.shared_scale, "simulate");
        read_field(s, "private_scale", sim.spec.private_scale, "simulate");
        rc.simulate = sim;
    }
    return rc;
}

RunConfig load_run_config(const std::string& path) {
    Json j;
    try {
        j = Json::parse(data::read_file_text(path));
    } catch (const nlohmann::json::exception& e) {
        throw InvalidConfig(path + ": malformed JSON: " + e.what());
    } catch (const FormatError& e) {
        throw InvalidConfig(e.what());
    }
    return run_config_from_json(j, fs::path(path).parent_path().string());
}

void cmd_simulate(const SimulateArgs& args) {
    RunConfig rc = load_run_config(args.config);
    if (args.seed) rc.train.seed = *args.seed;
    if (!rc.simulate) throw InvalidConfig("config: a 'simulate' section is required");
    rc.validate();
    const model::DiccaConfig c = rc.effective_model({});
    auto [dataset, truth] = data::make_synthetic(c, rc.simulate->spec, rc.simulate->n, rc.train.seed);
    io::write_dataset(dataset, args.out);
    io::write_text((fs::path(args.out) / "truth.json").string(), io::truth_to_json(truth).dump(2) + "\n");
    std::vector<std::string> header;
    for (std::size_t j = 0; j < truth.z.cols(); ++j) header.push_back("z" + std::to_string(j + 1));
    io::write_text((fs::path(args.out) / "latents_truth.csv").string(), io::matrix_to_csv(truth.z, header));
}

void cmd_mnist2view(const Mnist2ViewArgs& args) {
    Matrix images = data::load_idx_images(args.images);
    std::vector<int> labels = data::load_idx_labels(args.labels);
    if (labels.size() != images.rows())
        throw FormatError("label file has " + std::to_string(labels.size()) + " entries for " +
                          std::to_string(images.rows()) + " images");
    if (args.subset) {
        if (*args.subset == 0 || *args.subset > images.rows())
            throw InvalidConfig("--subset must be between 1 and " + std::to_string(images.rows()));
        std::vector<std::size_t> rows(*args.subset);
        for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
        images = take_rows(images, rows);
        labels.resize(*args.subset);
    }
    data::TwoViewOptions opt;
    if (args.max_angle) opt.max_angle = *args.max_angle;
    const MultiViewDataset d = data::make_noisy_two_view(images, labels, args.seed, opt);
    io::write_dataset(d, args.out);
}

optim::TrainReport cmd_fit(const FitArgs& args) {
    RunConfig rc = load_run_config(args.config);
    if (args.seed) rc.train.seed = *args.seed;
    if (args.epochs) rc.train.epochs = *args.epochs;
    if (args.lambda) rc.model.lambda = *args.lambda;
    rc.disable_private = rc.disable_private || args.disable_private;
    rc.lambda_zero = rc.lambda_zero || args.lambda_zero;
    rc.validate();

    const std::string manifest = args.data.empty() ? rc.data : args.data;
    if (manifest.empty()) throw InvalidConfig("no data manifest: pass --data or set 'data' in the config");
    const MultiViewDataset d = io::load_dataset(manifest);
    rc.validate(view_dims(d));
    const model::DiccaConfig c = rc.effective_model(view_dims(d));
    optim::TrainOptions opt = rc.train_options(c);
    if (!args.quiet)
        opt.on_epoch = [&](const optim::EpochRecord& e) {
            if (e.epoch == 1 || e.epoch % 10 == 0 || e.epoch == rc.train.epochs)
                std::cerr << "epoch " << e.epoch << " elbo " << e.elbo << "\n";
        };
    const optim::TrainResult r = optim::train(d, c, opt);

    fs::create_directories(args.out);
    io::save_model(r.params, c, (fs::path(args.out) / "model.dicca").string());
    io::write_text((fs::path(args.out) / "report.json").string(), io::report_to_json(r.report).dump(2) + "\n");

    if (!args.quiet) {
        if (!r.report.epochs.empty()) {
            const auto& last = r.report.epochs.back();
            std::cout << "final elbo " << io::format_double(last.elbo) << "\n";
            std::cout << "parts " << io::parts_to_json(last.parts).dump() << "\n";
        } else {
            std::cout << "final elbo n/a (0 epochs)\n";
        }
        std::cout << "zero columns shared " << join(r.report.final_zero_shared) << " private "
                  << join(r.report.final_zero_private) << "\n";
    }
    return r.report;
}

void cmd_eval(const EvalArgs& args) {
    const io::LoadedModel m = io::load_model(args.model);
    const MultiViewDataset d = io::load_dataset(args.data);
    check_dims(m.config, d);
    fs::create_directories(args.out);

    std::string metrics_text = "metric,view,value\n";
    auto emit = [&](const std::string& name, const Vector& per_view) {
        for (std::size_t v = 0; v < per_view.size(); ++v)
            metrics_text += name + "," + std::to_string(v + 1) + "," + io::format_double(per_view[v]) + "\n";
    };
    for (const auto& name : args.metrics) {
        if (name == "mse") {
            emit("mse", metrics::reconstruction_mse(m.config, m.params, d));
        } else if (name == "r2") {
            emit("r2", metrics::variance_explained_r2(m.config, m.params, d));
        } else if (name == "heatmap") {
            const metrics::GroupDependency g = metrics::group_dependency(m.params);
            const Matrix ns = g.normalized_shared(), np = g.normalized_private();
            std::string csv = "kind,view,dim,norm,normalized\n";
            auto rows = [&](const char* kind, const Matrix& raw, const Matrix& norm) {
                for (std::size_t v = 0; v < raw.rows(); ++v)
                    for (std::size_t j = 0; j < raw.cols(); ++j)
                        csv += std::string(kind) + "," + std::to_string(v + 1) + "," + std::to_string(j + 1) + "," +
                               io::format_double(raw(v, j)) + "," + io::format_double(norm(v, j)) + "\n";
            };
            rows("shared", g.shared, ns);
            rows("private", g.priv, np);
            io::write_text((fs::path(args.out) / "heatmap.csv").string(), csv);
            io::write_text((fs::path(args.out) / "heatmap.svg").string(), heatmap_svg(ns, np));
        } else if (name == "support") {
            if (args.truth.empty()) throw InvalidConfig("metric 'support' needs --truth");
            const data::PlantedTruth t = io::truth_from_json(Json::parse(data::read_file_text(args.truth)));
            metrics::SupportMask est = metrics::mask_from_params(m.params);
            const metrics::SupportMask truth{t.shared_mask, t.private_mask};
            // Align latent dims by loading similarity when the loadings live in feature space.
            bool aligned_space = t.lambda_mats.size() == m.params.lambda_mats.size();
            for (std::size_t v = 0; aligned_space && v < t.lambda_mats.size(); ++v)
                aligned_space = t.lambda_mats[v].rows() == m.params.lambda_mats[v].rows() &&
                                t.lambda_mats[v].cols() == m.params.lambda_mats[v].cols() &&
                                t.w_mats[v].cols() == m.params.w_mats[v].cols();
            if (aligned_space) {
                est.shared = metrics::permute_columns(
                    est.shared, metrics::best_assignment(metrics::loading_similarity(t.lambda_mats, m.params.lambda_mats)));
                for (std::size_t v = 0; v < est.priv.size(); ++v) {
                    const std::vector<std::vector<bool>> one{est.priv[v]};
                    const auto perm = metrics::best_assignment(metrics::loading_similarity(
                        std::span<const Matrix>(&t.w_mats[v], 1), std::span<const Matrix>(&m.params.w_mats[v], 1)));
                    est.priv[v] = metrics::permute_columns(one, perm).front();
                }
            }
            metrics_text += "support_f1,all," + io::format_double(metrics::support_f1(est, truth)) + "\n";
        } else {
            throw InvalidConfig("--metrics: unknown metric '" + name + "' (mse, r2, heatmap, support)");
        }
    }
    io::write_text((fs::path(args.out) / "metrics.csv").string(), metrics_text);
}

void cmd_transform(const TransformArgs& args) {
    const io::LoadedModel m = io::load_model(args.model);
    const MultiViewDataset d = io::load_dataset(args.data);
    check_dims(m.config, d);
    const model::Encoded e = model::encode(m.config, m.params, d.views);
    const Matrix* out = nullptr;
    std::string prefix;
    if (args.which == "shared") {
        out = &e.shared.mean;
        prefix = "z";
    } else if (args.which.starts_with("private:")) {
        std::size_t view = 0;
        try {
            view = std::stoul(args.which.substr(8));
        } catch (const std::exception&) {
            throw InvalidConfig("--which: expected shared or private:<view>");
        }
        if (view == 0 || view > m.config.views()) throw InvalidConfig("--which: view index out of range (1-based)");
        if (e.privates.empty()) throw InvalidConfig("--which: this model has no private latents");
        out = &e.privates[view - 1].mean;
        prefix = "z" + std::to_string(view) + "_";
    } else {
        throw InvalidConfig("--which: expected shared or private:<view>");
    }
    std::vector<std::string> header;
    for (std::size_t j = 0; j < out->cols(); ++j) header.push_back(prefix + std::to_string(j + 1));
    const fs::path parent = fs::path(args.out).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
    io::write_text(args.out, io::matrix_to_csv(*out, header));
}

std::string heatmap_svg(const Matrix& shared, const Matrix& priv) {
    constexpr int cell = 24, gap = 24, margin = 8, label = 16;
    const int rows = static_cast<int>(std::max(shared.rows(), priv.rows()));
    const int width = margin * 2 + static_cast<int>(shared.cols() + priv.cols()) * cell + gap;
    const int height = margin * 2 + label + rows * cell;
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
    s << "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
    auto panel = [&](const Matrix& a, int x0, const char* title) {
        s << "<text x=\"" << x0 << "\" y=\"" << margin + 12 << "\" font-family=\"sans-serif\" font-size=\"12\">" << title
          << "</text>\n";
        for (std::size_t v = 0; v < a.rows(); ++v)
            for (std::size_t j = 0; j < a.cols(); ++j)
                s << "<rect x=\"" << x0 + static_cast<int>(j) * cell << "\" y=\""
                  << margin + label + static_cast<int>(v) * cell << "\" width=\"" << cell << "\" height=\"" << cell
                  << "\" fill=\"" << ramp(a(v, j)) << "\" stroke=\"#cccccc\"/>\n";
    };
    panel(shared, margin, "shared");
    panel(priv, margin + static_cast<int>(shared.cols()) * cell + gap, "private");
    s << "</svg>\n";
    return s.str();
}

int run(int argc, char** argv) {
    if (const char* env = std::getenv("DICCA_THREADS")) {
        try {
            kernels::set_max_threads(std::stoi(env));
        } catch (const std::exception&) {
            std::cerr << "error: DICCA_THREADS must be an integer\n";
            return kConfigError;
        }
    }

    CLI::App app{"Deep interpretable variational CCA"};
    app.require_subcommand(1);

    SimulateArgs sim;
    std::uint64_t sim_seed = 0;
    auto* s = app.add_subcommand("simulate", "Generate a planted multi-view dataset");
    s->add_option("config", sim.config, "Run config (JSON)")->required();
    s->add_option("--out", sim.out, "Output directory")->required();
    auto* sim_seed_opt = s->add_option("--seed", sim_seed, "Seed (overrides train.seed)");

    Mnist2ViewArgs mn;
    auto* mc = app.add_subcommand("mnist2view", "Build the rotated / noisy two-view digits dataset");
    mc->add_option("--images", mn.images, "IDX image file")->required();
    mc->add_option("--labels", mn.labels, "IDX label file")->required();
    mc->add_option("--out", mn.out, "Output directory")->required();
    mc->add_option("--seed", mn.seed, "Seed");
    std::size_t subset = 0;
    auto* subset_opt = mc->add_option("--subset", subset, "Use only the first n images");
    double max_angle = 0.0;
    auto* angle_opt = mc->add_option("--max-angle", max_angle, "Largest rotation in radians (default pi/4)");

    FitArgs fit;
    std::uint64_t fit_seed = 0;
    std::size_t fit_epochs = 0;
    double fit_lambda = 0.0;
    auto* f = app.add_subcommand("fit", "Train a model");
    f->add_option("--data", fit.data, "Dataset manifest (defaults to the config's data field)");
    f->add_option("--config", fit.config, "Run config (JSON)")->required();
    f->add_option("--out", fit.out, "Output directory")->required();
    auto* fit_seed_opt = f->add_option("--seed", fit_seed, "Seed (overrides train.seed)");
    auto* fit_epochs_opt = f->add_option("--epochs", fit_epochs, "Epochs (overrides train.epochs)");
    auto* fit_lambda_opt = f->add_option("--lambda", fit_lambda, "Group-lasso strength (overrides model.lambda)");
    f->add_flag("--disable-private", fit.disable_private, "Shared-only ablation");
    f->add_flag("--lambda-zero", fit.lambda_zero, "Turn the group-lasso penalty off");
    f->add_flag("--quiet", fit.quiet, "No progress output");

    EvalArgs ev;
    std::string metric_list = "mse,r2,heatmap";
    auto* e = app.add_subcommand("eval", "Evaluate a model on a dataset");
    e->add_option("--model", ev.model, "Model file")->required();
    e->add_option("--data", ev.data, "Dataset manifest")->required();
    e->add_option("--metrics", metric_list, "Comma-separated: mse,r2,heatmap,support");
    e->add_option("--truth", ev.truth, "Planted truth file (for support)");
    e->add_option("--out", ev.out, "Output directory")->required();

    TransformArgs tr;
    auto* t = app.add_subcommand("transform", "Write posterior-mean latents");
    t->add_option("--model", tr.model, "Model file")->required();
    t->add_option("--data", tr.data, "Dataset manifest")->required();
    t->add_option("--out", tr.out, "Output CSV")->required();
    t->add_option("--which", tr.which, "shared or private:<view> (1-based)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        if (s->parsed()) {
            if (*sim_seed_opt) sim.seed = sim_seed;
            cmd_simulate(sim);
        } else if (mc->parsed()) {
            if (*subset_opt) mn.subset = subset;
            if (*angle_opt) mn.max_angle = max_angle;
            cmd_mnist2view(mn);
        } else if (f->parsed()) {
            if (*fit_seed_opt) fit.seed = fit_seed;
            if (*fit_epochs_opt) fit.epochs = fit_epochs;
            if (*fit_lambda_opt) fit.lambda = fit_lambda;
            cmd_fit(fit);
        } else if (e->parsed()) {
            ev.metrics.clear();
            std::stringstream ss(metric_list);
            for (std::string item; std::getline(ss, item, ',');)
                if (!item.empty()) ev.metrics.push_back(item);
            cmd_eval(ev);
        } else if (t->parsed()) {
            cmd_transform(tr);
        }
    } catch (const InvalidConfig& err) {
        std::cerr << "config error: " << err.what() << "\n";
        return kConfigError;
    } catch (const InvalidStructure& err) {
        std::cerr << "config error: " << err.what() << "\n";
        return kConfigError;
    } catch (const InvalidSplit& err) {
        std::cerr << "config error: " << err.what() << "\n";
        return kConfigError;
    } catch (const UnsupportedVersion& err) {
        std::cerr << "format error: " << err.what() << "\n";
        return kFormatError;
    } catch (const FormatError& err) {
        std::cerr << "format error: " << err.what() << "\n";
        return kFormatError;
    } catch (const TrainingDiverged& err) {
        std::cerr << "training diverged: epoch " << err.epoch() << ", batch " << err.batch() << "\n";
        return kDiverged;
    } catch (const NonFiniteGradient& err) {
        std::cerr << "training diverged: " << err.what() << "\n";
        return kDiverged;
    } catch (const ShapeMismatch& err) {
        std::cerr << "shape mismatch: " << err.what() << "\n";
        return kShapeError;
    } catch (const InvalidView& err) {
        std::cerr << "shape mismatch: " << err.what() << "\n";
        return kShapeError;
    } catch (const Error& err) {
        std::cerr << "error: " << err.what() << "\n";
        return kFailure;
    } catch (const nlohmann::json::exception& err) {
        std::cerr << "format error: " << err.what() << "\n";
        return kFormatError;
    } catch (const fs::filesystem_error& err) {
        std::cerr << "error: " << err.what() << "\n";
        return kFailure;
    }
    return kOk;
}

}  // namespace dicca::cli
