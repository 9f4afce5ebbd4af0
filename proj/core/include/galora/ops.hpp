// SPDX-FileCopyrightText: © 2026 The galora authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>

#include "galora/autodiff.hpp"

// Differentiable ops over rank-2 tensors. Each op checks operand shapes and
// throws ShapeError naming the op and both shapes.
namespace galora::num {

/// Compressed adjacency: neighbours of row v are indices[offsets[v] .. offsets[v+1]).
struct CsrView {
    std::span<const std::size_t> offsets;
    std::span<const std::size_t> indices;

    std::size_t num_rows() const noexcept { return offsets.empty() ? 0 : offsets.size() - 1; }
};

Var matmul(Var a, Var b);
/// x * w^T (+ bias broadcast over rows). `w` is out x in.
Var linear(Var x, Var w, std::optional<Var> bias = std::nullopt);
Var add(Var a, Var b);
/// Adds the 1 x n row to every row of x.
Var add_row(Var x, Var row);
Var scale(Var x, double s);
/// Multiplies x by the 1 x 1 value s.
Var scale_by(Var x, Var s);
Var sigmoid(Var x);
Var one_minus(Var x);
Var relu(Var x);
/// tanh approximation.
Var gelu(Var x);
/// Row-wise normalisation with biased variance.
Var layernorm(Var x, Var gamma, Var beta, double eps = 1e-5);
/// Row-wise softmax, max-subtracted.
Var softmax(Var x);

/**
 * Scaled dot-product attention softmax(QK^T / sqrt(dk)) V for one head.
 * Keys whose mask entry is 0 receive zero weight; a query with no visible key
 * produces a zero row.
 */
Var attention(Var q, Var k, Var v, std::span<const std::uint8_t> key_mask);
/// Self-attention over a packed [Q | K | V] input of width 3d split into `heads` heads.
Var multi_head_attention(Var qkv, std::size_t heads, std::span<const std::uint8_t> key_mask);

Var concat_cols(Var a, Var b);
/// Vertical concatenation; all parts share one column count.
Var stack_rows(std::span<const Var> parts);
Var slice_cols(Var x, std::size_t begin, std::size_t count);
Var slice_rows(Var x, std::size_t begin, std::size_t count);
Var gather_rows(Var x, std::span<const std::size_t> rows);
Var broadcast_rows(Var row, std::size_t n);

/// Mean of all rows of x as a 1 x cols row.
Var mean_rows(Var x);
/// Mean of the selected rows; the empty selection yields the zero row.
Var mean_rows(Var x, std::span<const std::size_t> rows);
/// Mean over rows whose mask entry is non-zero; an all-zero mask yields the zero row.
Var masked_mean_rows(Var x, std::span<const std::uint8_t> mask);
/// Row v of the result is the mean of x over the neighbours of v (zero when v has none).
Var neighbor_mean(Var x, const CsrView& adjacency);

/// Mean over the batch of -log softmax(logits)[label]. Returns a 1 x 1 tensor.
Var cross_entropy(Var logits, std::span<const std::size_t> labels);
Var sum(Var x);
/// Inverted dropout. rate == 0 returns x unchanged.
Var dropout(Var x, double rate, std::uint64_t seed);

// Value-level helpers shared with code that never records a tape.
Tensor softmax_rows(const Tensor& x);
double cross_entropy_value(const Tensor& logits, std::span<const std::size_t> labels);

}  // namespace galora::num
