// SPDX-FileCopyrightText: © 2026 The galora authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "galora/autodiff.hpp"
#include "galora/fusion.hpp"
#include "galora/tag_store.hpp"
#include "galora/vocabulary.hpp"

namespace galora::enc {

/// Names of the adaptable projections inside a block.
inline constexpr std::string_view kQkvProjection = "attn_qkv";
inline constexpr std::string_view kOutProjection = "attn_out";

struct BackboneConfig {
    std::size_t layers = 12;
    std::size_t d_model = 64;
    std::size_t heads = 4;
    std::size_t mlp_width = 256;
    std::size_t max_len = 128;
    std::size_t vocab_size = 4096;
    std::uint64_t seed = 0;

    void validate() const;
    friend bool operator==(const BackboneConfig&, const BackboneConfig&) = default;
};

/// Name and shape of every backbone tensor, derived from the config alone.
std::vector<std::pair<std::string, num::Shape>> backbone_parameter_shapes(const BackboneConfig& config);

/// d_in / d_out of the adaptable projections.
std::vector<fusion::LoraTargetShape> lora_target_shapes(const BackboneConfig& config,
                                                        std::span<const std::string> targets);

struct EncoderBlock {
    num::ParamPtr ln1_gamma, ln1_beta;
    num::ParamPtr qkv_w, qkv_b;
    num::ParamPtr out_w, out_b;
    num::ParamPtr ln2_gamma, ln2_beta;
    num::ParamPtr fc_w, fc_b;
    num::ParamPtr proj_w, proj_b;
};

/**
 * Pre-norm bidirectional transformer encoder with learned positions.
 *
 * Every weight starts frozen. Init: normal(0, 0.02) for embeddings and
 * projections, zero biases, unit layernorm gains.
 */
class EncoderBackbone {
public:
    explicit EncoderBackbone(const BackboneConfig& config);

    const BackboneConfig& config() const noexcept { return config_; }
    const num::ParamPtr& token_embedding() const noexcept { return tok_emb_; }
    const num::ParamPtr& position_embedding() const noexcept { return pos_emb_; }
    const EncoderBlock& block(std::size_t l) const { return blocks_.at(l); }
    const num::ParamPtr& final_gamma() const noexcept { return lnf_gamma_; }
    const num::ParamPtr& final_beta() const noexcept { return lnf_beta_; }

    /// Same order as backbone_parameter_shapes().
    num::ParamList parameters() const;

private:
    BackboneConfig config_;
    num::ParamPtr tok_emb_, pos_emb_;
    std::vector<EncoderBlock> blocks_;
    num::ParamPtr lnf_gamma_, lnf_beta_;
};

/**
 * Per-sequence adapter inputs. `pass1` / `pass2` are the node's 1 x g
 * structural rows and must be set when `fusion` has adapters of that source.
 */
struct Injection {
    const fusion::FusionAdapterSet* fusion = nullptr;
    const fusion::LoraSet* lora = nullptr;
    fusion::FusionForm form = fusion::FusionForm::residual;
    num::Var pass1;
    num::Var pass2;
};

/// Throws std::invalid_argument when an adapter or LoRA layer is >= L.
void validate_injection(const EncoderBackbone& backbone, const Injection& injection);

/// Token plus position embeddings, T x d.
num::Var embed(num::Tape& tape, const EncoderBackbone& backbone, std::span<const TokenId> ids);

num::Var run_block(num::Tape& tape, const EncoderBackbone& backbone, std::size_t layer, num::Var x,
                   std::span<const std::uint8_t> mask, const Injection* injection = nullptr);

/// Blocks [first, last).
num::Var run_blocks(num::Tape& tape, const EncoderBackbone& backbone, num::Var x, std::span<const std::uint8_t> mask,
                    std::size_t first, std::size_t last, const Injection* injection = nullptr);

num::Var final_norm(num::Tape& tape, const EncoderBackbone& backbone, num::Var x);

struct Encoded {
    /// Output of every block, before the final layernorm.
    std::vector<num::Var> layers;
    /// Final-layernormed states, T x d.
    num::Var output;
};

Encoded encode(num::Tape& tape, const EncoderBackbone& backbone, const TokenizedText& tokens,
               const Injection* injection = nullptr);

enum class Pooling { mean, cls };

std::string_view to_string(Pooling p);
Pooling parse_pooling(std::string_view s);

/// Mean over visible positions, or the first position for `cls`.
num::Var pool(num::Var states, std::span<const std::uint8_t> mask, Pooling pooling);

/// Pooled final states of every node's tokenized text, N x d.
num::Tensor node_features(const EncoderBackbone& backbone, const tag::TextAttributedGraph& graph,
                          const Vocabulary& vocab, const PromptSpec& prompt, std::size_t cap,
                          Pooling pooling = Pooling::mean);

/// Writes `x` as GTSR plus a JSON sidecar {"n", "d", "pooling", "prompt"}.
void save_features(const std::filesystem::path& gtsr_path, const std::filesystem::path& sidecar_path,
                   const num::Tensor& x, Pooling pooling, const PromptSpec& prompt);

}  // namespace galora::enc
