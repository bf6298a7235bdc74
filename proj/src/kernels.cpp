#include "dicca/kernels.hpp"

#include <string>

#include "dicca/errors.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dicca::kernels {

namespace {

// Below this many multiply-adds the fork/join cost dominates.
constexpr std::size_t kParallelWork = 32 * 1024;

int g_threads = 0;

int thread_count() {
#ifdef _OPENMP
    return g_threads > 0 ? g_threads : omp_get_max_threads();
#else
    return 1;
#endif
}

void check_inner(std::size_t lhs, std::size_t rhs, const char* op) {
    if (lhs != rhs) {
        throw ShapeMismatch(std::string(op) + ": inner dimensions " + std::to_string(lhs) +
                            " and " + std::to_string(rhs) + " differ");
    }
}

}  // namespace

void set_max_threads(int n) { g_threads = n > 0 ? n : 0; }

int max_threads() { return thread_count(); }

Matrix matmul(const Matrix& a, const Matrix& b) {
    check_inner(a.cols(), b.rows(), "matmul");
    const std::size_t n = a.rows(), inner = a.cols(), m = b.cols();
    Matrix c(n, m);
    const double* pa = a.data();
    const double* pb = b.data();
    double* pc = c.data();
    const bool par = n * inner * m >= kParallelWork;
    [[maybe_unused]] const int threads = thread_count();
#pragma omp parallel for schedule(static) if (par) num_threads(threads)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
        double* crow = pc + i * m;
        const double* arow = pa + i * inner;
        for (std::size_t k = 0; k < inner; ++k) {
            const double aik = arow[k];
            const double* brow = pb + k * m;
            for (std::size_t j = 0; j < m; ++j) crow[j] += aik * brow[j];
        }
    }
    return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    check_inner(a.rows(), b.rows(), "matmul_tn");
    const std::size_t n = a.rows(), p = a.cols(), q = b.cols();
    Matrix c(p, q);
    const double* pa = a.data();
    const double* pb = b.data();
    double* pc = c.data();
    const bool par = n * p * q >= kParallelWork;
    [[maybe_unused]] const int threads = thread_count();
#pragma omp parallel for schedule(static) if (par) num_threads(threads)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(p); ++i) {
        double* crow = pc + i * q;
        for (std::size_t k = 0; k < n; ++k) {
            const double aki = pa[k * p + i];
            if (aki == 0.0) continue;
            const double* brow = pb + k * q;
            for (std::size_t j = 0; j < q; ++j) crow[j] += aki * brow[j];
        }
    }
    return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    check_inner(a.cols(), b.cols(), "matmul_nt");
    const std::size_t n = a.rows(), inner = a.cols(), m = b.rows();
    Matrix c(n, m);
    const double* pa = a.data();
    const double* pb = b.data();
    double* pc = c.data();
    const bool par = n * inner * m >= kParallelWork;
    [[maybe_unused]] const int threads = thread_count();
#pragma omp parallel for schedule(static) if (par) num_threads(threads)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
        const double* arow = pa + i * inner;
        for (std::size_t j = 0; j < m; ++j) {
            const double* brow = pb + j * inner;
            // Four interleaved partial sums so the loop vectorises; the
            // order is fixed, so results do not depend on the thread count.
            double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
            std::size_t k = 0;
            for (; k + 4 <= inner; k += 4) {
                s0 += arow[k] * brow[k];
                s1 += arow[k + 1] * brow[k + 1];
                s2 += arow[k + 2] * brow[k + 2];
                s3 += arow[k + 3] * brow[k + 3];
            }
            for (; k < inner; ++k) s0 += arow[k] * brow[k];
            pc[i * m + j] = (s0 + s1) + (s2 + s3);
        }
    }
    return c;
}

namespace reference {

Matrix matmul(const Matrix& a, const Matrix& b) {
    check_inner(a.cols(), b.rows(), "matmul");
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
            c(i, j) = s;
        }
    return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    check_inner(a.rows(), b.rows(), "matmul_tn");
    Matrix c(a.cols(), b.cols());
    for (std::size_t i = 0; i < a.cols(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < a.rows(); ++k) s += a(k, i) * b(k, j);
            c(i, j) = s;
        }
    return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    check_inner(a.cols(), b.cols(), "matmul_nt");
    Matrix c(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.rows(); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(j, k);
            c(i, j) = s;
        }
    return c;
}

}  // namespace reference

}  // namespace dicca::kernels
