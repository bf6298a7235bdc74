#include "dicca/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "dicca/errors.hpp"

namespace dicca::linalg {

namespace {

constexpr int kMaxSweeps = 100;
constexpr double kEps = 1e-15;

void require_finite(const Matrix& a, const char* op) {
    if (a.rows() == 0 || a.cols() == 0) throw InvalidMatrix(std::string(op) + ": empty matrix");
    if (!a.all_finite()) throw InvalidMatrix(std::string(op) + ": non-finite entry");
}

// Sort indices by value, descending; ties keep their original order.
std::vector<std::size_t> descending_order(const Vector& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] > v[b]; });
    return idx;
}

// Replace the flagged columns of q with unit vectors orthogonal to every
// other column (modified Gram-Schmidt against the standard basis).
void complete_orthonormal(Matrix& q, const std::vector<bool>& valid) {
    const std::size_t m = q.rows(), k = q.cols();
    std::vector<bool> ok = valid;
    for (std::size_t j = 0; j < k; ++j) {
        if (ok[j]) continue;
        double best_norm = -1.0;
        Vector best;
        for (std::size_t e = 0; e < m; ++e) {
            Vector v(m, 0.0);
            v[e] = 1.0;
            for (int pass = 0; pass < 2; ++pass) {
                for (std::size_t c = 0; c < k; ++c) {
                    if (!ok[c]) continue;
                    double dot = 0.0;
                    for (std::size_t r = 0; r < m; ++r) dot += q(r, c) * v[r];
                    for (std::size_t r = 0; r < m; ++r) v[r] -= dot * q(r, c);
                }
            }
            double norm = 0.0;
            for (double x : v) norm += x * x;
            norm = std::sqrt(norm);
            if (norm > best_norm + 1e-12) {
                best_norm = norm;
                best = std::move(v);
            }
        }
        for (std::size_t r = 0; r < m; ++r) q(r, j) = best[r] / best_norm;
        ok[j] = true;
    }
}

// a is m x n with m >= n.
SvdResult svd_tall(const Matrix& a) {
    const std::size_t m = a.rows(), n = a.cols();
    Matrix w = a;
    Matrix v = Matrix::identity(n);

    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double alpha = 0.0, beta = 0.0, gamma = 0.0;
                for (std::size_t i = 0; i < m; ++i) {
                    const double wp = w(i, p), wq = w(i, q);
                    alpha += wp * wp;
                    beta += wq * wq;
                    gamma += wp * wq;
                }
                if (gamma == 0.0 || std::abs(gamma) <= kEps * std::sqrt(alpha * beta)) continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t i = 0; i < m; ++i) {
                    const double wp = w(i, p), wq = w(i, q);
                    w(i, p) = c * wp - s * wq;
                    w(i, q) = s * wp + c * wq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double vp = v(i, p), vq = v(i, q);
                    v(i, p) = c * vp - s * vq;
                    v(i, q) = s * vp + c * vq;
                }
            }
        }
        if (!rotated) break;
    }

    Vector sigma(n);
    for (std::size_t j = 0; j < n; ++j) sigma[j] = column_norm(w, j);
    const auto order = descending_order(sigma);
    const double smax = sigma[order.front()];

    SvdResult out{Matrix(m, n), Vector(n), Matrix(n, n)};
    std::vector<bool> valid(n, true);
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t src = order[j];
        out.s[j] = sigma[src];
        // Columns this small relative to the largest carry no direction.
        if (sigma[src] == 0.0 || sigma[src] <= smax * 1e-13) {
            valid[j] = false;
        } else {
            for (std::size_t i = 0; i < m; ++i) out.u(i, j) = w(i, src) / sigma[src];
        }
        for (std::size_t i = 0; i < n; ++i) out.vt(j, i) = v(i, src);
    }
    complete_orthonormal(out.u, valid);
    return out;
}

}  // namespace

bool is_symmetric(const Matrix& a, double tol) {
    if (a.rows() != a.cols()) return false;
    const double scale = std::max(1.0, max_abs(a));
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = i + 1; j < a.cols(); ++j)
            if (std::abs(a(i, j) - a(j, i)) > tol * scale) return false;
    return true;
}

SvdResult svd(const Matrix& a) {
    require_finite(a, "svd");
    if (a.rows() >= a.cols()) return svd_tall(a);
    SvdResult t = svd_tall(a.transposed());
    return {t.vt.transposed(), std::move(t.s), t.u.transposed()};
}

EigResult sym_eig(const Matrix& input) {
    require_finite(input, "sym_eig");
    if (!is_symmetric(input)) throw InvalidMatrix("sym_eig: matrix is not symmetric");
    const std::size_t n = input.rows();
    Matrix a = input;
    Matrix v = Matrix::identity(n);

    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        double off = 0.0, diag = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            diag += a(i, i) * a(i, i);
            for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
        }
        if (off == 0.0 || off <= kEps * kEps * diag) break;

        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    Vector diag(n);
    for (std::size_t i = 0; i < n; ++i) diag[i] = a(i, i);
    const auto order = descending_order(diag);
    EigResult out{Vector(n), Matrix(n, n)};
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t src = order[j];
        out.values[j] = diag[src];
        std::size_t arg = 0;
        for (std::size_t i = 1; i < n; ++i)
            if (std::abs(v(i, src)) > std::abs(v(arg, src))) arg = i;
        const double sign = v(arg, src) < 0.0 ? -1.0 : 1.0;
        for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = sign * v(i, src);
    }
    return out;
}

Matrix inv_sqrt_psd(const Matrix& a, double ridge) {
    if (!(ridge >= 0.0) || !std::isfinite(ridge)) throw InvalidMatrix("inv_sqrt_psd: ridge must be finite and >= 0");
    Matrix ridged = a;
    for (std::size_t i = 0; i < std::min(a.rows(), a.cols()); ++i) ridged(i, i) += ridge;
    const EigResult e = sym_eig(ridged);
    const double smallest = e.values.back();
    if (!(smallest > 1e-12)) {
        throw SingularCovariance("matrix is not positive definite after ridge " + std::to_string(ridge) +
                                     " (smallest eigenvalue " + std::to_string(smallest) + ")",
                                 smallest);
    }
    const std::size_t n = a.rows();
    Matrix r(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        const double w = 1.0 / std::sqrt(e.values[k]);
        for (std::size_t i = 0; i < n; ++i) {
            const double vik = e.vectors(i, k) * w;
            for (std::size_t j = 0; j < n; ++j) r(i, j) += vik * e.vectors(j, k);
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) r(i, j) = r(j, i) = 0.5 * (r(i, j) + r(j, i));
    return r;
}

Matrix sqrt_psd(const Matrix& a) {
    const EigResult e = sym_eig(a);
    const std::size_t n = a.rows();
    Matrix r(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        const double w = std::sqrt(std::max(e.values[k], 0.0));
        if (w == 0.0) continue;
        for (std::size_t i = 0; i < n; ++i) {
            const double vik = e.vectors(i, k) * w;
            for (std::size_t j = 0; j < n; ++j) r(i, j) += vik * e.vectors(j, k);
        }
    }
    return r;
}

}  // namespace dicca::linalg
