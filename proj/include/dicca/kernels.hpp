#pragma once

#include "dicca/matrix.hpp"

// Dense products used by the network and model layers.
//
// The OpenMP kernels split work over output rows only; every output entry is
// accumulated by one thread in ascending inner-index order, so results are
// bitwise identical for any thread count. The `reference` namespace holds the
// plain serial triple loops the kernels are tested and benchmarked against.
namespace dicca::kernels {

// C = A * B
Matrix matmul(const Matrix& a, const Matrix& b);
// C = A^T * B
Matrix matmul_tn(const Matrix& a, const Matrix& b);
// C = A * B^T
Matrix matmul_nt(const Matrix& a, const Matrix& b);

// Thread cap for the kernels. 0 restores the OpenMP default. The CLI reads
// DICCA_THREADS and forwards it here.
void set_max_threads(int n);
int max_threads();

namespace reference {
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix matmul_nt(const Matrix& a, const Matrix& b);
}  // namespace reference

}  // namespace dicca::kernels
