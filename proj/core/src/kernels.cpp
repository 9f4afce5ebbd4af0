// SPDX-FileCopyrightText: © 2026 The galora authors
//
// SPDX-License-Identifier: Apache-2.0

#include "galora/kernels.hpp"

#include <algorithm>
#include <vector>

namespace galora::num::kernels {

namespace {

inline void row_acc(std::size_t k, std::size_t n, const double* __restrict a, const double* __restrict b,
                    double* __restrict c) {
    for (std::size_t p = 0; p < k; ++p) {
        const double s = a[p];
        const double* brow = b + p * n;
        for (std::size_t j = 0; j < n; ++j) c[j] += s * brow[j];
    }
}

}  // namespace

// Four output rows share each streamed row of b. Every output element still
// sums its products in order p = 0, 1, ..., k - 1.
void gemm_nn_acc(std::size_t m, std::size_t k, std::size_t n, const double* __restrict a,
                 const double* __restrict b, double* __restrict c) {
    std::size_t i = 0;
    for (; i + 4 <= m; i += 4) {
        double* __restrict c0 = c + i * n;
        double* __restrict c1 = c0 + n;
        double* __restrict c2 = c1 + n;
        double* __restrict c3 = c2 + n;
        const double* a0 = a + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double s0 = a0[p], s1 = a0[k + p], s2 = a0[2 * k + p], s3 = a0[3 * k + p];
            const double* brow = b + p * n;
            for (std::size_t j = 0; j < n; ++j) {
                const double bv = brow[j];
                c0[j] += s0 * bv;
                c1[j] += s1 * bv;
                c2[j] += s2 * bv;
                c3[j] += s3 * bv;
            }
        }
    }
    for (; i < m; ++i) row_acc(k, n, a + i * k, b, c + i * n);
}

// Rows of a and b are consumed four at a time; each output element still
// accumulates in order r = 0, 1, ..., m - 1.
void gemm_tn_acc(std::size_t m, std::size_t k, std::size_t n, const double* __restrict a,
                 const double* __restrict b, double* __restrict c) {
    std::size_t r = 0;
    for (; r + 4 <= m; r += 4) {
        const double* a0 = a + r * k;
        const double* b0 = b + r * n;
        const double* b1 = b0 + n;
        const double* b2 = b1 + n;
        const double* b3 = b2 + n;
        for (std::size_t p = 0; p < k; ++p) {
            const double s0 = a0[p], s1 = a0[k + p], s2 = a0[2 * k + p], s3 = a0[3 * k + p];
            double* __restrict crow = c + p * n;
            for (std::size_t j = 0; j < n; ++j) {
                crow[j] = (((crow[j] + s0 * b0[j]) + s1 * b1[j]) + s2 * b2[j]) + s3 * b3[j];
            }
        }
    }
    for (; r < m; ++r) {
        const double* arow = a + r * k;
        const double* brow = b + r * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double s = arow[p];
            double* crow = c + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += s * brow[j];
        }
    }
}

void gemm_nt_acc(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b, double* c) {
    constexpr std::size_t kBlock = 16;
    std::vector<double> bt(k * n);
    for (std::size_t j0 = 0; j0 < n; j0 += kBlock) {
        const std::size_t j1 = std::min(n, j0 + kBlock);
        for (std::size_t p0 = 0; p0 < k; p0 += kBlock) {
            const std::size_t p1 = std::min(k, p0 + kBlock);
            for (std::size_t j = j0; j < j1; ++j) {
                for (std::size_t p = p0; p < p1; ++p) bt[p * n + j] = b[j * k + p];
            }
        }
    }
    gemm_nn_acc(m, k, n, a, bt.data(), c);
}

}  // namespace galora::num::kernels
