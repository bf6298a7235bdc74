#pragma once

#include "dicca/matrix.hpp"

namespace dicca::linalg {

// Thin SVD: a (m x n) = u (m x k) * diag(s) * vt (k x n), k = min(m, n).
struct SvdResult {
    Matrix u;
    Vector s;  // non-negative, descending
    Matrix vt;
};

struct EigResult {
    Vector values;  // descending
    Matrix vectors; // column i pairs with values[i]
};

// One-sided (Hestenes) Jacobi SVD. Throws InvalidMatrix on non-finite input
// or an empty matrix.
SvdResult svd(const Matrix& a);

// Cyclic Jacobi eigendecomposition of a symmetric matrix. Eigenvectors are
// sign-normalised so their largest-magnitude entry is positive.
EigResult sym_eig(const Matrix& a);

// (a + ridge * I)^(-1/2) through the eigenbasis. Throws SingularCovariance
// when an eigenvalue of the ridged matrix is <= 1e-12.
Matrix inv_sqrt_psd(const Matrix& a, double ridge = 1e-6);

// Symmetric square root of a PSD matrix, clamping tiny negative eigenvalues
// to zero. Used to colour noise with a full covariance.
Matrix sqrt_psd(const Matrix& a);

bool is_symmetric(const Matrix& a, double tol = 1e-12);

}  // namespace dicca::linalg
