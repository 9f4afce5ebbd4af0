// SPDX-FileCopyrightText: © 2026 The galora authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "galora/audit.hpp"
#include "galora/encoder.hpp"
#include "galora/fusion.hpp"
#include "galora/sage.hpp"
#include "galora/tag_store.hpp"
#include "galora/vocabulary.hpp"

namespace galora::train {

/// galora: fusion and LoRA as toggled. text_only: head only. lora_only: LoRA pairs and head.
enum class BaselineMode { galora, text_only, lora_only };

std::string_view to_string(BaselineMode m);
BaselineMode parse_baseline(std::string_view s);

struct RunConfig {
    double lr = 3e-4;
    double weight_decay = 1e-2;
    std::size_t batch_size = 32;
    std::size_t epochs = 100;
    std::size_t patience = 10;
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
    std::size_t seq_len = 16;
    std::string prompt;
    std::size_t rank = 4;
    /// Placement::default_for(L) when unset.
    std::optional<fusion::Placement> placement;
    bool fusion = true;
    bool lora_pairs = true;
    /// Fusion W_A / W_C share storage with the output-projection LoRA pair of the same layer.
    bool tie_fusion_to_lora = false;
    fusion::FusionForm fusion_form = fusion::FusionForm::residual;
    BaselineMode mode = BaselineMode::galora;
    enc::Pooling pooling = enc::Pooling::mean;
    std::vector<std::string> lora_targets{std::string(enc::kQkvProjection), std::string(enc::kOutProjection)};

    bool uses_fusion() const noexcept { return mode == BaselineMode::galora && fusion; }
    bool uses_lora() const noexcept { return mode != BaselineMode::text_only && lora_pairs; }
    fusion::Placement placement_for(std::size_t num_layers) const;
    /// Lowest layer holding an adapter or LoRA pair; `num_layers` when there is none.
    std::size_t first_adapted_layer(std::size_t num_layers) const;
    void validate(const enc::BackboneConfig& backbone) const;
    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/**
 * Frozen backbone and structural embeddings plus the trainable adapters,
 * LoRA pairs and a d -> C head. Holds references: the backbone and the
 * embeddings must outlive the assembly.
 */
class Phase2Assembly {
public:
    Phase2Assembly(const enc::EncoderBackbone& backbone, const sage::SageEmbeddings& embeddings,
                   std::size_t num_classes, const RunConfig& config, std::uint64_t seed);

    const enc::EncoderBackbone& backbone() const noexcept { return *backbone_; }
    const sage::SageEmbeddings& embeddings() const noexcept { return *embeddings_; }
    const RunConfig& config() const noexcept { return config_; }
    const fusion::FusionAdapterSet& fusion() const noexcept { return fusion_; }
    const fusion::LoraSet& lora() const noexcept { return lora_; }
    const num::ParamPtr& head_weight() const noexcept { return head_w_; }
    const num::ParamPtr& head_bias() const noexcept { return head_b_; }
    std::size_t num_classes() const noexcept { return num_classes_; }

    /// Adapters, LoRA pairs and head, each tensor once.
    num::ParamList trainable() const;
    /// Every tensor of the assembly; the GNN is included from its shapes when `gnn` is set.
    fusion::ParameterRegistry registry(const std::optional<sage::SageConfig>& gnn = std::nullopt) const;
    fusion::ParamAudit audit(const std::optional<sage::SageConfig>& gnn = std::nullopt) const;

private:
    const enc::EncoderBackbone* backbone_;
    const sage::SageEmbeddings* embeddings_;
    RunConfig config_;
    std::size_t num_classes_;
    fusion::FusionAdapterSet fusion_;
    fusion::LoraSet lora_;
    num::ParamPtr head_w_, head_b_;
};

/// Shape-only registry of the assembly that `config` would build, for audits without allocating weights.
fusion::ParameterRegistry describe_assembly(const enc::BackboneConfig& backbone, const sage::SageConfig& gnn,
                                            const RunConfig& config, std::size_t num_classes);

/**
 * Tokenized node texts plus, per node, the backbone state that the trainable
 * part of the network starts from: the input of layer `start_layer`, or the
 * pooled final state when start_layer == L.
 */
struct PreparedInputs {
    std::vector<enc::TokenizedText> tokens;
    std::size_t start_layer = 0;
    enc::Pooling pooling = enc::Pooling::mean;
    std::vector<num::Tensor> cache;
};

PreparedInputs prepare_inputs(const enc::EncoderBackbone& backbone, const tag::TextAttributedGraph& graph,
                              const enc::Vocabulary& vocab, const RunConfig& config);

/// 1 x C logits for node v.
num::Var node_logits(num::Tape& tape, const Phase2Assembly& assembly, const PreparedInputs& inputs, tag::NodeId v);

/// Metric over the nodes of `split`. Throws tag::DataError for an empty split.
double evaluate(const Phase2Assembly& assembly, const PreparedInputs& inputs, const tag::TextAttributedGraph& graph,
                tag::Split split);

struct SeedResult {
    std::uint64_t seed = 0;
    double test_metric = 0.0;
    double best_val_metric = 0.0;
    std::size_t best_epoch = 0;
    std::size_t epochs_run = 0;
    /// Mean training loss per epoch.
    std::vector<double> loss_trace;
    /// Validation metric per epoch; entry 0 is the untrained assembly.
    std::vector<double> val_trace;
};

/**
 * Minibatch AdamW on the training nodes, shuffled per epoch from the seed.
 * Keeps the epoch with the best validation metric (strict improvement) and
 * restores it before the test evaluation.
 */
SeedResult train_phase2(Phase2Assembly& assembly, const PreparedInputs& inputs, const tag::TextAttributedGraph& graph,
                        std::uint64_t seed);

struct RunReport {
    BaselineMode mode = BaselineMode::galora;
    std::string metric_name;
    /// Sorted by seed.
    std::vector<SeedResult> seeds;
    double mean = 0.0;
    /// Sample standard deviation; absent for a single seed.
    std::optional<double> std_dev;
    fusion::ParamAudit audit;
    double wall_clock_seconds = 0.0;

    /// Deterministic content only; wall clock is left out.
    nlohmann::ordered_json to_json() const;
};

struct Statistics {
    double mean = 0.0;
    std::optional<double> std_dev;
};

/// Mean and (n - 1) standard deviation, summed in the given order.
Statistics summarize(const std::vector<double>& values);

/// Aggregates per-seed results after sorting them by seed.
RunReport aggregate(std::vector<SeedResult> results, BaselineMode mode, std::string metric_name,
                    const fusion::ParamAudit& audit);

struct Phase2Inputs {
    const enc::EncoderBackbone* backbone = nullptr;
    const tag::TextAttributedGraph* graph = nullptr;
    const enc::Vocabulary* vocab = nullptr;
    const sage::SageEmbeddings* embeddings = nullptr;
    /// Included in the audit when set.
    std::optional<sage::SageConfig> gnn;
};

using SeedCallback = std::function<void(const Phase2Assembly&, const SeedResult&)>;

/// One independent run per seed of `config.seeds`.
RunReport seed_sweep(const Phase2Inputs& inputs, const RunConfig& config, const SeedCallback& on_seed = {});
/// Same, reusing already prepared inputs.
RunReport seed_sweep(const Phase2Inputs& inputs, const PreparedInputs& prepared, const RunConfig& config,
                     const SeedCallback& on_seed = {});

/// One GTSR per trainable tensor plus adapters.json {layer, source, r, gate_logit, targets}.
void save_adapters(const std::filesystem::path& dir, const Phase2Assembly& assembly);
/// Overwrites every trainable tensor from `dir`. Throws tag::DataError for a missing or misshapen file.
void load_adapters(const std::filesystem::path& dir, Phase2Assembly& assembly);

}  // namespace galora::train
