#include "dicca/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "dicca/errors.hpp"

namespace dicca::metrics {

namespace {

void check_data(const model::DiccaConfig& c, const MultiViewDataset& data) {
    data.validate();
    if (data.view_count() != c.views())
        throw ShapeMismatch("dataset has " + std::to_string(data.view_count()) + " views, model expects " +
                            std::to_string(c.views()));
    for (std::size_t m = 0; m < c.views(); ++m)
        if (data.views[m].cols() != c.dims[m])
            throw ShapeMismatch("view " + std::to_string(m) + " has " + std::to_string(data.views[m].cols()) +
                                " features, model expects " + std::to_string(c.dims[m]));
}

double sum_sq_diff(const Matrix& a, const Matrix& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a.data()[i] - b.data()[i];
        s += d * d;
    }
    return s;
}

Matrix normalized(const Matrix& a, double max) {
    Matrix out(a.rows(), a.cols());
    if (max > 0.0)
        for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] / max;
    return out;
}

std::vector<bool> active_columns(const Matrix& a, double tau) {
    std::vector<bool> out(a.cols());
    for (std::size_t j = 0; j < a.cols(); ++j) out[j] = column_norm(a, j) > tau;
    return out;
}

}  // namespace

Vector reconstruction_mse(const model::DiccaConfig& config, const model::DiccaParams& params,
                          const MultiViewDataset& data, std::uint64_t) {
    check_data(config, data);
    const auto rec = model::reconstruct(config, params, data.views);
    Vector out;
    for (std::size_t m = 0; m < config.views(); ++m)
        out.push_back(sum_sq_diff(data.views[m], rec[m]) / static_cast<double>(data.views[m].size()));
    return out;
}

Vector variance_explained_r2(const model::DiccaConfig& config, const model::DiccaParams& params,
                             const MultiViewDataset& data) {
    check_data(config, data);
    Vector sst;
    for (std::size_t m = 0; m < config.views(); ++m) {
        double s = 0.0;
        for (double x : data.views[m].values()) s += x * x;
        if (s == 0.0) throw DegenerateView("view " + std::to_string(m) + " is all zeros");
        sst.push_back(s);
    }
    const auto rec = model::reconstruct(config, params, data.views);
    Vector out;
    for (std::size_t m = 0; m < config.views(); ++m) out.push_back(1.0 - sum_sq_diff(data.views[m], rec[m]) / sst[m]);
    return out;
}

Matrix GroupDependency::normalized_shared() const { return normalized(shared, shared_max); }
Matrix GroupDependency::normalized_private() const { return normalized(priv, private_max); }

GroupDependency group_dependency(const model::DiccaParams& params) {
    const std::size_t views = params.lambda_mats.size();
    std::size_t k = 0, kp = 0;
    for (std::size_t m = 0; m < views; ++m) {
        k = std::max(k, params.lambda_mats[m].cols());
        kp = std::max(kp, params.w_mats[m].cols());
    }
    GroupDependency g{Matrix(views, k), Matrix(views, kp)};
    for (std::size_t m = 0; m < views; ++m) {
        for (std::size_t j = 0; j < params.lambda_mats[m].cols(); ++j) {
            g.shared(m, j) = column_norm(params.lambda_mats[m], j);
            g.shared_max = std::max(g.shared_max, g.shared(m, j));
        }
        for (std::size_t j = 0; j < params.w_mats[m].cols(); ++j) {
            g.priv(m, j) = column_norm(params.w_mats[m], j);
            g.private_max = std::max(g.private_max, g.priv(m, j));
        }
    }
    return g;
}

std::vector<Loading> top_features(const model::DiccaConfig& config, const model::DiccaParams& params,
                                  std::size_t view, std::size_t latent_dim, std::size_t n, Which which) {
    if (view >= config.views()) throw InvalidIndex("view " + std::to_string(view) + " out of range");
    const Matrix& a = which == Which::shared ? params.lambda_mats.at(view) : params.w_mats.at(view);
    if (latent_dim >= a.cols()) throw InvalidIndex("latent dimension " + std::to_string(latent_dim) + " out of range");
    Vector influence = a.column(latent_dim);
    if (config.gen_input_dim(view) != config.dims[view]) {
        const auto& layers = params.generators.at(view).layers();
        const auto first = std::find_if(layers.begin(), layers.end(),
                                         [](const nn::Layer& l) { return l.kind == nn::LayerKind::affine; });
        if (first == layers.end()) throw InvalidIndex("generator has no affine layer to map loadings through");
        Vector mapped(first->out, 0.0);
        for (std::size_t i = 0; i < first->in; ++i)
            for (std::size_t o = 0; o < first->out; ++o) mapped[o] += influence[i] * first->weight(i, o);
        influence = std::move(mapped);
    }
    std::vector<Loading> out;
    for (std::size_t f = 0; f < influence.size(); ++f) out.push_back({f + 1, std::abs(influence[f])});
    std::stable_sort(out.begin(), out.end(), [](const Loading& x, const Loading& y) { return x.magnitude > y.magnitude; });
    if (out.size() > n) out.resize(n);
    return out;
}

double support_f1(const SupportMask& estimated, const SupportMask& truth) {
    auto same_shape = [](const std::vector<std::vector<bool>>& x, const std::vector<std::vector<bool>>& y) {
        if (x.size() != y.size()) return false;
        for (std::size_t m = 0; m < x.size(); ++m)
            if (x[m].size() != y[m].size()) return false;
        return true;
    };
    if (!same_shape(estimated.shared, truth.shared) || !same_shape(estimated.priv, truth.priv))
        throw ShapeMismatch("support masks differ in shape");
    std::size_t tp = 0, fp = 0, fn = 0;
    auto count = [&](const std::vector<std::vector<bool>>& e, const std::vector<std::vector<bool>>& t) {
        for (std::size_t m = 0; m < e.size(); ++m)
            for (std::size_t j = 0; j < e[m].size(); ++j) {
                tp += e[m][j] && t[m][j];
                fp += e[m][j] && !t[m][j];
                fn += !e[m][j] && t[m][j];
            }
    };
    count(estimated.shared, truth.shared);
    count(estimated.priv, truth.priv);
    if (tp + fp + fn == 0) return 1.0;
    return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

SupportMask mask_from_params(const model::DiccaParams& params, double tau) {
    SupportMask s;
    for (const auto& a : params.lambda_mats) s.shared.push_back(active_columns(a, tau));
    for (const auto& w : params.w_mats) s.priv.push_back(active_columns(w, tau));
    return s;
}

std::vector<std::size_t> best_assignment(const Matrix& score) {
    const std::size_t k = score.rows();
    if (score.cols() != k) throw ShapeMismatch("best_assignment: score matrix must be square");
    std::vector<std::size_t> perm(k);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    if (k <= 8) {
        std::vector<std::size_t> best = perm;
        double best_score = -1.0;
        do {
            double s = 0.0;
            for (std::size_t i = 0; i < k; ++i) s += score(i, perm[i]);
            if (s > best_score) {
                best_score = s;
                best = perm;
            }
        } while (std::next_permutation(perm.begin(), perm.end()));
        return best;
    }
    std::vector<bool> row_used(k, false), col_used(k, false);
    for (std::size_t step = 0; step < k; ++step) {
        double best = -1.0;
        std::size_t bi = 0, bj = 0;
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < k; ++j)
                if (!row_used[i] && !col_used[j] && score(i, j) > best) {
                    best = score(i, j);
                    bi = i;
                    bj = j;
                }
        row_used[bi] = col_used[bj] = true;
        perm[bi] = bj;
    }
    return perm;
}

Matrix loading_similarity(std::span<const Matrix> reference, std::span<const Matrix> estimate) {
    if (reference.size() != estimate.size() || reference.empty())
        throw ShapeMismatch("loading_similarity: view counts differ");
    const std::size_t k = reference.front().cols();
    Matrix score(k, estimate.front().cols());
    for (std::size_t m = 0; m < reference.size(); ++m) {
        const Matrix& r = reference[m];
        const Matrix& e = estimate[m];
        if (r.rows() != e.rows() || r.cols() != k || e.cols() != score.cols())
            throw ShapeMismatch("loading_similarity: view " + std::to_string(m) + " shapes differ");
        for (std::size_t i = 0; i < k; ++i) {
            const double ni = column_norm(r, i);
            for (std::size_t j = 0; j < e.cols(); ++j) {
                const double nj = column_norm(e, j);
                if (ni == 0.0 || nj == 0.0) continue;
                double dot = 0.0;
                for (std::size_t d = 0; d < r.rows(); ++d) dot += r(d, i) * e(d, j);
                score(i, j) += std::abs(dot) / (ni * nj);
            }
        }
    }
    return score;
}

Matrix latent_similarity(const Matrix& reference, const Matrix& estimate) {
    if (reference.rows() != estimate.rows() || reference.rows() < 2)
        throw ShapeMismatch("latent_similarity: row counts differ");
    const double n = static_cast<double>(reference.rows());
    auto centred = [&](const Matrix& a) {
        Matrix c = a;
        for (std::size_t j = 0; j < a.cols(); ++j) {
            double mean = 0.0;
            for (std::size_t i = 0; i < a.rows(); ++i) mean += a(i, j);
            mean /= n;
            for (std::size_t i = 0; i < a.rows(); ++i) c(i, j) -= mean;
        }
        return c;
    };
    const Matrix r = centred(reference), e = centred(estimate);
    Matrix score(r.cols(), e.cols());
    for (std::size_t i = 0; i < r.cols(); ++i) {
        const double ni = column_norm(r, i);
        for (std::size_t j = 0; j < e.cols(); ++j) {
            const double nj = column_norm(e, j);
            if (ni == 0.0 || nj == 0.0) continue;
            double dot = 0.0;
            for (std::size_t t = 0; t < r.rows(); ++t) dot += r(t, i) * e(t, j);
            score(i, j) = std::abs(dot) / (ni * nj);
        }
    }
    return score;
}

std::vector<std::vector<bool>> permute_columns(const std::vector<std::vector<bool>>& mask,
                                               const std::vector<std::size_t>& perm) {
    std::vector<std::vector<bool>> out;
    for (const auto& row : mask) {
        if (row.size() != perm.size()) throw ShapeMismatch("permute_columns: permutation length differs from mask width");
        std::vector<bool> r(row.size());
        for (std::size_t i = 0; i < perm.size(); ++i) r[i] = row.at(perm[i]);
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace dicca::metrics
