#pragma once

// Reference computations written independently of the library's linear
// algebra: Cholesky factors, Householder tridiagonalisation and Sturm-sequence
// bisection. Shared by the unit tests and the acceptance binary.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "dicca/matrix.hpp"
#include "dicca/network.hpp"

namespace dicca::oracle {

inline Matrix multiply(const Matrix& a, const Matrix& b) {
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k)
            for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += a(i, k) * b(k, j);
    return c;
}

inline Matrix covariance(const Matrix& a, const Matrix& b) {
    const std::size_t n = a.rows();
    std::vector<double> ma(a.cols(), 0.0), mb(b.cols(), 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t j = 0; j < a.cols(); ++j) ma[j] += a(r, j) / static_cast<double>(n);
        for (std::size_t j = 0; j < b.cols(); ++j) mb[j] += b(r, j) / static_cast<double>(n);
    }
    Matrix c(a.cols(), b.cols());
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t i = 0; i < a.cols(); ++i)
            for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += (a(r, i) - ma[i]) * (b(r, j) - mb[j]);
    c *= 1.0 / static_cast<double>(n);
    return c;
}

// Lower-triangular L with L L^T = a.
inline Matrix cholesky(const Matrix& a) {
    const std::size_t n = a.rows();
    Matrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (!(d > 0.0)) throw std::runtime_error("oracle: matrix is not positive definite");
        l(j, j) = std::sqrt(d);
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / l(j, j);
        }
    }
    return l;
}

// Solves L X = B by forward substitution.
inline Matrix solve_lower(const Matrix& l, const Matrix& b) {
    Matrix x = b;
    for (std::size_t c = 0; c < b.cols(); ++c)
        for (std::size_t i = 0; i < l.rows(); ++i) {
            double s = x(i, c);
            for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * x(k, c);
            x(i, c) = s / l(i, i);
        }
    return x;
}

// Eigenvalues of a symmetric matrix, descending.
inline std::vector<double> symmetric_eigenvalues(Matrix a) {
    const std::size_t n = a.rows();
    // Householder reduction to tridiagonal form.
    for (std::size_t k = 0; k + 2 < n; ++k) {
        double alpha = 0.0;
        for (std::size_t i = k + 1; i < n; ++i) alpha += a(i, k) * a(i, k);
        alpha = std::sqrt(alpha);
        if (alpha == 0.0) continue;
        if (a(k + 1, k) > 0) alpha = -alpha;
        std::vector<double> v(n, 0.0);
        v[k + 1] = a(k + 1, k) - alpha;
        for (std::size_t i = k + 2; i < n; ++i) v[i] = a(i, k);
        double vv = 0.0;
        for (double x : v) vv += x * x;
        if (vv == 0.0) continue;
        // a <- H a H with H = I - 2 v v^T / vv
        std::vector<double> p(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) p[i] += a(i, j) * v[j];
        for (double& x : p) x *= 2.0 / vv;
        double pv = 0.0;
        for (std::size_t i = 0; i < n; ++i) pv += p[i] * v[i];
        const double kfac = pv / vv;
        std::vector<double> q(n);
        for (std::size_t i = 0; i < n; ++i) q[i] = p[i] - kfac * v[i];
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) a(i, j) -= q[i] * v[j] + v[i] * q[j];
    }
    std::vector<double> d(n), e(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) d[i] = a(i, i);
    for (std::size_t i = 0; i + 1 < n; ++i) e[i + 1] = a(i + 1, i);

    double bound = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        bound = std::max(bound, std::abs(d[i]) + std::abs(e[i]) + (i + 1 < n ? std::abs(e[i + 1]) : 0.0));
    bound += 1.0;

    // Number of eigenvalues strictly below x (Sturm count).
    auto below = [&](double x) {
        std::size_t count = 0;
        double q = 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            q = d[i] - x - (i > 0 ? e[i] * e[i] / q : 0.0);
            if (q == 0.0) q = -1e-300;
            if (q < 0.0) ++count;
        }
        return count;
    };
    std::vector<double> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        // k-th smallest eigenvalue
        double lo = -bound, hi = bound;
        for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo) + std::abs(hi)); ++it) {
            const double mid = 0.5 * (lo + hi);
            if (below(mid) > k)
                hi = mid;
            else
                lo = mid;
        }
        out[k] = 0.5 * (lo + hi);
    }
    std::sort(out.begin(), out.end(), std::greater<>());
    return out;
}

// Canonical correlations from the generalised problem
// S12 S2^-1 S21 a = rho^2 S1 a, reduced with Cholesky factors of the ridged
// covariances to the symmetric matrix M M^T, M = L1^-1 S12 L2^-T.
inline std::vector<double> canonical_correlations(const Matrix& x1, const Matrix& x2, double ridge) {
    Matrix s1 = covariance(x1, x1), s2 = covariance(x2, x2);
    const Matrix s12 = covariance(x1, x2);
    for (std::size_t i = 0; i < s1.rows(); ++i) s1(i, i) += ridge;
    for (std::size_t i = 0; i < s2.rows(); ++i) s2(i, i) += ridge;
    const Matrix l1 = cholesky(s1), l2 = cholesky(s2);
    const Matrix a = solve_lower(l1, s12);                   // L1^-1 S12
    const Matrix m = solve_lower(l2, a.transposed()).transposed();  // L1^-1 S12 L2^-T
    const auto ev = symmetric_eigenvalues(multiply(m, m.transposed()));
    std::vector<double> rho;
    for (std::size_t i = 0; i < std::min(x1.cols(), x2.cols()); ++i) rho.push_back(std::sqrt(std::max(ev[i], 0.0)));
    return rho;
}

inline double pearson(std::span<const double> a, std::span<const double> b) {
    const double n = static_cast<double>(a.size());
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i] / n;
        mb += b[i] / n;
    }
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

// Element-at-a-time network evaluation, sharing nothing with the batched path.
inline std::vector<double> scalar_forward_row(const nn::Network& net, std::vector<double> h) {
    for (const auto& l : net.layers()) {
        if (l.kind == nn::LayerKind::affine) {
            std::vector<double> y(l.out);
            for (std::size_t j = 0; j < l.out; ++j) {
                double s = l.bias[j];
                for (std::size_t i = 0; i < l.in; ++i) s += h[i] * l.weight(i, j);
                y[j] = s;
            }
            h = y;
            continue;
        }
        for (double& v : h) {
            switch (l.kind) {
                case nn::LayerKind::relu: v = v > 0 ? v : 0; break;
                case nn::LayerKind::softplus: v = std::log(1.0 + std::exp(v)); break;
                case nn::LayerKind::tanh: v = std::tanh(v); break;
                case nn::LayerKind::exp: v = std::exp(v); break;
                default: break;
            }
        }
    }
    return h;
}

inline Matrix scalar_forward(const nn::Network& net, const Matrix& x) {
    Matrix out(x.rows(), net.output_dim());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const auto h = scalar_forward_row(net, {x.row(r).begin(), x.row(r).end()});
        for (std::size_t j = 0; j < h.size(); ++j) out(r, j) = h[j];
    }
    return out;
}

}  // namespace dicca::oracle
