#pragma once

#include <cstdint>
#include <utility>

#include "dicca/matrix.hpp"

namespace dicca::cca {

// Linear CCA fitted by whitening each view and taking the SVD of
// T = S1^(-1/2) S12 S2^(-1/2).
struct CcaModel {
    Matrix u1;          // d1 x k
    Matrix u2;          // d2 x k
    Vector correlations;  // descending
    Vector mean1;
    Vector mean2;
    double ridge = 0.0;
};

// Two-view probabilistic CCA: x_m = W_m z + e_m, z ~ N(0, I), e_m ~ N(0, Psi_m).
struct PccaModel {
    Matrix w1;    // d1 x dz
    Matrix w2;    // d2 x dz
    Matrix psi1;  // d1 x d1, symmetric PSD
    Matrix psi2;  // d2 x d2, symmetric PSD

    void validate() const;
};

// Rows are samples. Covariances use 1/N normalisation; each canonical pair is
// sign-normalised so the largest-magnitude entry of the u1 column is positive.
CcaModel fit_cca(const Matrix& x1, const Matrix& x2, std::size_t k, double ridge = 1e-6);

// (x - mean) * U for view 0 or 1.
Matrix project(const CcaModel& model, const Matrix& x, std::size_t view);

// Empirical (1/N) covariance of the centred columns of a and b: a_c^T b_c / N.
Matrix cross_covariance(const Matrix& a, const Matrix& b);
Vector column_means(const Matrix& x);

Matrix pcca_joint_covariance(const PccaModel& model);

std::pair<Matrix, Matrix> pcca_sample(const PccaModel& model, std::size_t n, std::uint64_t seed);

}  // namespace dicca::cca
