#include "dicca/cca.hpp"

#include <cmath>
#include <string>

#include "dicca/errors.hpp"
#include "dicca/kernels.hpp"
#include "dicca/linalg.hpp"
#include "dicca/random.hpp"

namespace dicca::cca {

namespace {

Matrix center(const Matrix& x, const Vector& mean) {
    Matrix c = x;
    for (std::size_t r = 0; r < c.rows(); ++r)
        for (std::size_t j = 0; j < c.cols(); ++j) c(r, j) -= mean[j];
    return c;
}

void check_psd(const Matrix& psi, const char* name) {
    if (!linalg::is_symmetric(psi)) throw InvalidMatrix(std::string(name) + " is not symmetric");
    const auto e = linalg::sym_eig(psi);
    if (e.values.back() < -1e-10) throw InvalidMatrix(std::string(name) + " is not PSD");
}

}  // namespace

void PccaModel::validate() const {
    if (w1.cols() != w2.cols()) throw ShapeMismatch("pcca: W1 and W2 latent widths differ");
    if (psi1.rows() != w1.rows() || psi1.cols() != w1.rows())
        throw ShapeMismatch("pcca: psi1 must be d1 x d1");
    if (psi2.rows() != w2.rows() || psi2.cols() != w2.rows())
        throw ShapeMismatch("pcca: psi2 must be d2 x d2");
    check_psd(psi1, "psi1");
    check_psd(psi2, "psi2");
}

Vector column_means(const Matrix& x) {
    Vector mean(x.cols(), 0.0);
    for (std::size_t r = 0; r < x.rows(); ++r)
        for (std::size_t j = 0; j < x.cols(); ++j) mean[j] += x(r, j);
    for (double& m : mean) m /= static_cast<double>(x.rows());
    return mean;
}

Matrix cross_covariance(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) throw ShapeMismatch("cross_covariance: row counts differ");
    Matrix c = kernels::matmul_tn(center(a, column_means(a)), center(b, column_means(b)));
    c *= 1.0 / static_cast<double>(a.rows());
    return c;
}

CcaModel fit_cca(const Matrix& x1, const Matrix& x2, std::size_t k, double ridge) {
    if (x1.rows() != x2.rows())
        throw ShapeMismatch("fit_cca: views have " + std::to_string(x1.rows()) + " and " +
                            std::to_string(x2.rows()) + " samples");
    if (x1.rows() < 2) throw ShapeMismatch("fit_cca: need at least two samples");
    if (k == 0 || k > std::min(x1.cols(), x2.cols()))
        throw InvalidIndex("fit_cca: k must be in [1, min(d1, d2)]");
    if (!x1.all_finite() || !x2.all_finite()) throw InvalidMatrix("fit_cca: non-finite input");

    CcaModel model;
    model.ridge = ridge;
    model.mean1 = column_means(x1);
    model.mean2 = column_means(x2);
    const Matrix c1 = center(x1, model.mean1);
    const Matrix c2 = center(x2, model.mean2);
    const double inv_n = 1.0 / static_cast<double>(x1.rows());

    Matrix s1 = kernels::matmul_tn(c1, c1) * inv_n;
    Matrix s2 = kernels::matmul_tn(c2, c2) * inv_n;
    const Matrix s12 = kernels::matmul_tn(c1, c2) * inv_n;

    const Matrix r1 = linalg::inv_sqrt_psd(s1, ridge);
    const Matrix r2 = linalg::inv_sqrt_psd(s2, ridge);
    const Matrix t = kernels::matmul(kernels::matmul(r1, s12), r2);
    const auto dec = linalg::svd(t);

    // top-k left/right singular vectors, mapped back through the whitening
    Matrix v1(t.rows(), k), v2(t.cols(), k);
    for (std::size_t j = 0; j < k; ++j) {
        for (std::size_t i = 0; i < t.rows(); ++i) v1(i, j) = dec.u(i, j);
        for (std::size_t i = 0; i < t.cols(); ++i) v2(i, j) = dec.vt(j, i);
    }
    model.u1 = kernels::matmul(r1, v1);
    model.u2 = kernels::matmul(r2, v2);
    model.correlations.assign(dec.s.begin(), dec.s.begin() + static_cast<std::ptrdiff_t>(k));

    for (std::size_t j = 0; j < k; ++j) {
        std::size_t arg = 0;
        for (std::size_t i = 1; i < model.u1.rows(); ++i)
            if (std::abs(model.u1(i, j)) > std::abs(model.u1(arg, j))) arg = i;
        if (model.u1(arg, j) < 0.0) {
            for (std::size_t i = 0; i < model.u1.rows(); ++i) model.u1(i, j) = -model.u1(i, j);
            for (std::size_t i = 0; i < model.u2.rows(); ++i) model.u2(i, j) = -model.u2(i, j);
        }
    }
    return model;
}

Matrix project(const CcaModel& model, const Matrix& x, std::size_t view) {
    if (view > 1) throw InvalidView("project: view must be 0 or 1, got " + std::to_string(view));
    const Matrix& u = view == 0 ? model.u1 : model.u2;
    const Vector& mean = view == 0 ? model.mean1 : model.mean2;
    if (x.cols() != u.rows())
        throw ShapeMismatch("project: data has " + std::to_string(x.cols()) + " columns, view expects " +
                            std::to_string(u.rows()));
    return kernels::matmul(center(x, mean), u);
}

Matrix pcca_joint_covariance(const PccaModel& model) {
    model.validate();
    const std::size_t d1 = model.w1.rows(), d2 = model.w2.rows();
    const Matrix a11 = kernels::matmul_nt(model.w1, model.w1) + model.psi1;
    const Matrix a12 = kernels::matmul_nt(model.w1, model.w2);
    const Matrix a22 = kernels::matmul_nt(model.w2, model.w2) + model.psi2;
    Matrix out(d1 + d2, d1 + d2);
    for (std::size_t i = 0; i < d1; ++i) {
        for (std::size_t j = 0; j < d1; ++j) out(i, j) = a11(i, j);
        for (std::size_t j = 0; j < d2; ++j) out(i, d1 + j) = out(d1 + j, i) = a12(i, j);
    }
    for (std::size_t i = 0; i < d2; ++i)
        for (std::size_t j = 0; j < d2; ++j) out(d1 + i, d1 + j) = a22(i, j);
    return out;
}

std::pair<Matrix, Matrix> pcca_sample(const PccaModel& model, std::size_t n, std::uint64_t seed) {
    model.validate();
    Rng latent_rng(seed, 0), noise1_rng(seed, 1), noise2_rng(seed, 2);
    const Matrix z = latent_rng.normal_matrix(n, model.w1.cols());
    const Matrix e1 = kernels::matmul(noise1_rng.normal_matrix(n, model.w1.rows()), linalg::sqrt_psd(model.psi1));
    const Matrix e2 = kernels::matmul(noise2_rng.normal_matrix(n, model.w2.rows()), linalg::sqrt_psd(model.psi2));
    return {kernels::matmul_nt(z, model.w1) + e1, kernels::matmul_nt(z, model.w2) + e2};
}

}  // namespace dicca::cca
