// SPDX-FileCopyrightText: © 2026 The galora authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>

// Dense matrix kernels over row-major buffers. Every output element is
// accumulated in a fixed left-to-right order over the reduction index, so a
// row of the result depends only on the matching input row and results are
// bitwise reproducible regardless of how many rows are processed together.
namespace galora::num::kernels {

/// C[m x n] += A[m x k] * B[k x n]
void gemm_nn_acc(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b, double* c);

/// C[k x n] += A[m x k]^T * B[m x n]
void gemm_tn_acc(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b, double* c);

/// C[m x n] += A[m x k] * B[n x k]^T
void gemm_nt_acc(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b, double* c);

}  // namespace galora::num::kernels
