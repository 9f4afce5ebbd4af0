// SPDX-FileCopyrightText: © 2026 The galora authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "galora/autodiff.hpp"
#include "galora/ops.hpp"

namespace galora::fusion {

enum class StructureSource { pass1, pass2 };

/// residual: the layer receives H1 + Z. replace: the layer receives Z alone.
enum class FusionForm { residual, replace };

std::string_view to_string(StructureSource s);
std::string_view to_string(FusionForm f);
FusionForm parse_fusion_form(std::string_view s);

/**
 * Gated low-rank fusion of a layer input H1 (T x d) with a node's structural
 * embedding h2 (1 x g, broadcast over all T positions):
 *
 *   Z = (alpha * H1 W_A^T + (1 - alpha) * 1 (W_B h2)^T) W_C^T,  alpha = sigmoid(gate_logit)
 *
 * W_A is r x d, W_B is r x g, W_C is d x r.
 */
struct FusionAdapter {
    std::size_t layer = 0;
    StructureSource source = StructureSource::pass1;
    num::ParamPtr w_a;
    num::ParamPtr w_b;
    num::ParamPtr w_c;
    num::ParamPtr gate_logit;

    std::size_t rank() const { return w_a->value.rows(); }
    std::size_t model_dim() const { return w_a->value.cols(); }
    std::size_t graph_dim() const { return w_b->value.cols(); }
    double gate() const;
    num::ParamList parameters() const;
};

num::Var fusion_apply(num::Tape& tape, const FusionAdapter& adapter, num::Var h1, num::Var h2,
                      FusionForm form = FusionForm::residual);

/// Which encoder layers receive Pass-1 and Pass-2 embeddings.
struct Placement {
    std::vector<std::size_t> pass1_layers;
    std::vector<std::size_t> pass2_layers;

    /// {5,6,7} / {9,10,11} for 12 layers; other depths keep the same shape: the
    /// last quarter of the lower two thirds, and the last quarter overall.
    static Placement default_for(std::size_t num_layers);
    /// Disjoint, in range, every Pass-1 layer below every Pass-2 layer.
    void validate(std::size_t num_layers) const;
    std::vector<std::size_t> all_layers() const;

    friend bool operator==(const Placement&, const Placement&) = default;
};

/**
 * Low-rank additive update on a frozen projection: y = x (W + s B A)^T + bias.
 * A is r x d_in, B is d_out x r; B starts at zero so the initial delta is exactly zero.
 */
struct LoraPair {
    std::size_t layer = 0;
    std::string target;
    num::ParamPtr a;
    num::ParamPtr b;
    double scaling = 1.0;

    std::size_t rank() const { return a->value.rows(); }
    std::size_t trainable_count() const { return a->value.size() + b->value.size(); }
    num::ParamList parameters() const { return {a, b}; }
};

num::Var lora_apply(num::Tape& tape, const LoraPair& pair, num::Var frozen_w, num::Var x,
                    std::optional<num::Var> bias = std::nullopt);

/// A projection inside every adapted layer that receives a LoRA pair.
struct LoraTargetShape {
    std::string name;
    std::size_t d_in = 0;
    std::size_t d_out = 0;
};

class LoraSet {
public:
    LoraSet() = default;
    /// One pair per (layer, target). A ~ normal(0, 0.02), B = 0.
    static LoraSet build(std::span<const std::size_t> layers, std::span<const LoraTargetShape> targets,
                         std::size_t rank, std::uint64_t seed, double scaling = 1.0);

    const LoraPair* find(std::size_t layer, std::string_view target) const;
    std::span<const LoraPair> pairs() const noexcept { return pairs_; }
    bool empty() const noexcept { return pairs_.empty(); }
    num::ParamList parameters() const;
    std::size_t trainable_count() const;

private:
    std::vector<LoraPair> pairs_;
};

class FusionAdapterSet {
public:
    FusionAdapterSet() = default;

    /**
     * Adapters for every placed layer: W_A, W_B ~ normal(0, 0.02), W_C = 0,
     * gate_logit = 0 (alpha = 0.5). Throws std::invalid_argument for a bad placement or r = 0.
     */
    static FusionAdapterSet build(std::size_t num_layers, const Placement& placement, std::size_t rank,
                                  std::size_t model_dim, std::size_t graph_dim, std::uint64_t seed);

    /// Shares W_A and W_C with the `target` LoRA pair of the same layer (A and B respectively).
    void tie_to_lora(const LoraSet& lora, std::string_view target);

    const FusionAdapter* at(std::size_t layer) const;
    std::span<const FusionAdapter> adapters() const noexcept { return adapters_; }
    bool empty() const noexcept { return adapters_.empty(); }
    /// Unique parameters (tied matrices appear once).
    num::ParamList parameters() const;

private:
    std::vector<FusionAdapter> adapters_;
};

}  // namespace galora::fusion
