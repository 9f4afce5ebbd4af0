// SPDX-FileCopyrightText: © 2026 The galora authors
//
// SPDX-License-Identifier: Apache-2.0

#include "galora/encoder.hpp"

#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "galora/ops.hpp"
#include "galora/rng.hpp"

namespace galora::enc {

using num::ParamPtr;
using num::Tensor;
using num::Var;

void BackboneConfig::validate() const {
    if (layers < 2) throw std::invalid_argument("backbone: need at least 2 layers, got " + std::to_string(layers));
    if (d_model == 0 || heads == 0 || d_model % heads != 0) {
        throw std::invalid_argument("backbone: d_model " + std::to_string(d_model) + " not divisible by " +
                                    std::to_string(heads) + " heads");
    }
    if (mlp_width == 0) throw std::invalid_argument("backbone: mlp_width must be positive");
    if (max_len < 4) throw std::invalid_argument("backbone: max_len must be at least 4");
    if (vocab_size <= Vocabulary::kReserved) throw std::invalid_argument("backbone: vocab_size too small");
}

std::vector<std::pair<std::string, num::Shape>> backbone_parameter_shapes(const BackboneConfig& c) {
    const std::size_t d = c.d_model, m = c.mlp_width;
    std::vector<std::pair<std::string, num::Shape>> out{{"tok_emb", {c.vocab_size, d}}, {"pos_emb", {c.max_len, d}}};
    for (std::size_t l = 0; l < c.layers; ++l) {
        const std::string p = "block." + std::to_string(l) + ".";
        out.push_back({p + "ln1.gamma", {1, d}});
        out.push_back({p + "ln1.beta", {1, d}});
        out.push_back({p + "qkv.w", {3 * d, d}});
        out.push_back({p + "qkv.b", {1, 3 * d}});
        out.push_back({p + "out.w", {d, d}});
        out.push_back({p + "out.b", {1, d}});
        out.push_back({p + "ln2.gamma", {1, d}});
        out.push_back({p + "ln2.beta", {1, d}});
        out.push_back({p + "fc.w", {m, d}});
        out.push_back({p + "fc.b", {1, m}});
        out.push_back({p + "proj.w", {d, m}});
        out.push_back({p + "proj.b", {1, d}});
    }
    out.push_back({"lnf.gamma", {1, d}});
    out.push_back({"lnf.beta", {1, d}});
    return out;
}

std::vector<fusion::LoraTargetShape> lora_target_shapes(const BackboneConfig& c, std::span<const std::string> targets) {
    std::vector<fusion::LoraTargetShape> out;
    for (const auto& t : targets) {
        if (t == kQkvProjection) {
            out.push_back({t, c.d_model, 3 * c.d_model});
        } else if (t == kOutProjection) {
            out.push_back({t, c.d_model, c.d_model});
        } else {
            throw std::invalid_argument("unknown LoRA target '" + t + "' (expected attn_qkv|attn_out)");
        }
    }
    return out;
}

EncoderBackbone::EncoderBackbone(const BackboneConfig& config) : config_(config) {
    config_.validate();
    Rng rng = Rng::stream(config_.seed, 0x656e636f646572ULL);
    const std::size_t d = config_.d_model, m = config_.mlp_width;
    auto normal = [&](std::string name, std::size_t r, std::size_t c) {
        return num::make_param(std::move(name), num::normal_tensor(r, c, 0.02, rng), true);
    };
    auto fill = [](std::string name, std::size_t c, double v) {
        return num::make_param(std::move(name), Tensor(1, c, v), true);
    };
    tok_emb_ = normal("tok_emb", config_.vocab_size, d);
    pos_emb_ = normal("pos_emb", config_.max_len, d);
    blocks_.reserve(config_.layers);
    for (std::size_t l = 0; l < config_.layers; ++l) {
        const std::string p = "block." + std::to_string(l) + ".";
        EncoderBlock b;
        b.ln1_gamma = fill(p + "ln1.gamma", d, 1.0);
        b.ln1_beta = fill(p + "ln1.beta", d, 0.0);
        b.qkv_w = normal(p + "qkv.w", 3 * d, d);
        b.qkv_b = fill(p + "qkv.b", 3 * d, 0.0);
        b.out_w = normal(p + "out.w", d, d);
        b.out_b = fill(p + "out.b", d, 0.0);
        b.ln2_gamma = fill(p + "ln2.gamma", d, 1.0);
        b.ln2_beta = fill(p + "ln2.beta", d, 0.0);
        b.fc_w = normal(p + "fc.w", m, d);
        b.fc_b = fill(p + "fc.b", m, 0.0);
        b.proj_w = normal(p + "proj.w", d, m);
        b.proj_b = fill(p + "proj.b", d, 0.0);
        blocks_.push_back(std::move(b));
    }
    lnf_gamma_ = fill("lnf.gamma", d, 1.0);
    lnf_beta_ = fill("lnf.beta", d, 0.0);
}

num::ParamList EncoderBackbone::parameters() const {
    num::ParamList out{tok_emb_, pos_emb_};
    for (const auto& b : blocks_) {
        out.insert(out.end(), {b.ln1_gamma, b.ln1_beta, b.qkv_w, b.qkv_b, b.out_w, b.out_b, b.ln2_gamma, b.ln2_beta,
                               b.fc_w, b.fc_b, b.proj_w, b.proj_b});
    }
    out.push_back(lnf_gamma_);
    out.push_back(lnf_beta_);
    return out;
}

void validate_injection(const EncoderBackbone& backbone, const Injection& inj) {
    const std::size_t L = backbone.config().layers;
    if (inj.fusion) {
        for (const auto& ad : inj.fusion->adapters()) {
            if (ad.layer >= L) {
                throw std::invalid_argument("adapter layer " + std::to_string(ad.layer) + " >= " + std::to_string(L) +
                                            " encoder layers");
            }
            const Var& h = ad.source == fusion::StructureSource::pass1 ? inj.pass1 : inj.pass2;
            if (!h.valid()) {
                throw std::invalid_argument("adapter on layer " + std::to_string(ad.layer) + " needs a " +
                                            std::string(fusion::to_string(ad.source)) + " embedding");
            }
            const auto& hv = h.value();
            if (ad.model_dim() != backbone.config().d_model || hv.rows() != 1 || hv.cols() != ad.graph_dim()) {
                throw num::ShapeError("adapter on layer " + std::to_string(ad.layer) + " expects d=" +
                                      std::to_string(ad.model_dim()) + ", g=" + std::to_string(ad.graph_dim()) +
                                      " but got d=" + std::to_string(backbone.config().d_model) + ", embedding " +
                                      num::shape_string(hv.shape()));
            }
        }
    }
    if (inj.lora) {
        for (const auto& p : inj.lora->pairs()) {
            if (p.layer >= L) {
                throw std::invalid_argument("LoRA layer " + std::to_string(p.layer) + " >= " + std::to_string(L) +
                                            " encoder layers");
            }
        }
    }
}

Var embed(num::Tape& tape, const EncoderBackbone& bb, std::span<const TokenId> ids) {
    const auto& c = bb.config();
    if (ids.empty() || ids.size() > c.max_len) {
        throw std::invalid_argument("embed: sequence length " + std::to_string(ids.size()) + " outside [1, " +
                                    std::to_string(c.max_len) + "]");
    }
    for (TokenId id : ids) {
        if (id >= c.vocab_size) {
            throw std::out_of_range("embed: token id " + std::to_string(id) + " >= vocab_size " +
                                    std::to_string(c.vocab_size));
        }
    }
    const Var tok = num::gather_rows(tape.param(bb.token_embedding()), ids);
    const Var pos = num::slice_rows(tape.param(bb.position_embedding()), 0, ids.size());
    return num::add(tok, pos);
}

namespace {

Var project(num::Tape& tape, const num::ParamPtr& w, const num::ParamPtr& b, Var x, const fusion::LoraSet* lora,
            std::size_t layer, std::string_view target) {
    const fusion::LoraPair* pair = lora ? lora->find(layer, target) : nullptr;
    if (pair) return fusion::lora_apply(tape, *pair, tape.param(w), x, tape.param(b));
    return num::linear(x, tape.param(w), tape.param(b));
}

}  // namespace

Var run_block(num::Tape& tape, const EncoderBackbone& bb, std::size_t layer, Var x, std::span<const std::uint8_t> mask,
              const Injection* inj) {
    const EncoderBlock& b = bb.block(layer);
    if (inj && inj->fusion) {
        if (const fusion::FusionAdapter* ad = inj->fusion->at(layer)) {
            const Var h2 = ad->source == fusion::StructureSource::pass1 ? inj->pass1 : inj->pass2;
            x = fusion::fusion_apply(tape, *ad, x, h2, inj->form);
        }
    }
    const fusion::LoraSet* lora = inj ? inj->lora : nullptr;
    const Var h = num::layernorm(x, tape.param(b.ln1_gamma), tape.param(b.ln1_beta));
    const Var qkv = project(tape, b.qkv_w, b.qkv_b, h, lora, layer, kQkvProjection);
    const Var att = num::multi_head_attention(qkv, bb.config().heads, mask);
    const Var x2 = num::add(x, project(tape, b.out_w, b.out_b, att, lora, layer, kOutProjection));
    const Var h2 = num::layernorm(x2, tape.param(b.ln2_gamma), tape.param(b.ln2_beta));
    const Var f = num::gelu(num::linear(h2, tape.param(b.fc_w), tape.param(b.fc_b)));
    return num::add(x2, num::linear(f, tape.param(b.proj_w), tape.param(b.proj_b)));
}

Var run_blocks(num::Tape& tape, const EncoderBackbone& bb, Var x, std::span<const std::uint8_t> mask, std::size_t first,
               std::size_t last, const Injection* inj) {
    if (last > bb.config().layers || first > last) {
        throw std::out_of_range("run_blocks: range [" + std::to_string(first) + ", " + std::to_string(last) +
                                ") outside " + std::to_string(bb.config().layers) + " layers");
    }
    for (std::size_t l = first; l < last; ++l) x = run_block(tape, bb, l, x, mask, inj);
    return x;
}

Var final_norm(num::Tape& tape, const EncoderBackbone& bb, Var x) {
    return num::layernorm(x, tape.param(bb.final_gamma()), tape.param(bb.final_beta()));
}

Encoded encode(num::Tape& tape, const EncoderBackbone& bb, const TokenizedText& tokens, const Injection* inj) {
    if (tokens.mask.size() != tokens.ids.size()) throw std::invalid_argument("encode: ids and mask lengths differ");
    if (inj) validate_injection(bb, *inj);
    Encoded out;
    Var x = embed(tape, bb, tokens.ids);
    out.layers.reserve(bb.config().layers);
    for (std::size_t l = 0; l < bb.config().layers; ++l) {
        x = run_block(tape, bb, l, x, tokens.mask, inj);
        out.layers.push_back(x);
    }
    out.output = final_norm(tape, bb, x);
    return out;
}

std::string_view to_string(Pooling p) { return p == Pooling::mean ? "mean" : "cls"; }

Pooling parse_pooling(std::string_view s) {
    if (s == "mean") return Pooling::mean;
    if (s == "cls") return Pooling::cls;
    throw std::invalid_argument("unknown pooling '" + std::string(s) + "' (expected mean|cls)");
}

Var pool(Var states, std::span<const std::uint8_t> mask, Pooling pooling) {
    if (pooling == Pooling::cls) return num::slice_rows(states, 0, 1);
    return num::masked_mean_rows(states, mask);
}

Tensor node_features(const EncoderBackbone& bb, const tag::TextAttributedGraph& graph, const Vocabulary& vocab,
                     const PromptSpec& prompt, std::size_t cap, Pooling pooling) {
    const std::size_t n = graph.num_nodes(), d = bb.config().d_model;
    Tensor x(n, d);
    for (tag::NodeId v = 0; v < n; ++v) {
        num::Tape tape(false);
        const TokenizedText tok = tokenize(graph.node(v).text, prompt, vocab, cap).visible_prefix();
        const Var pooled = pool(encode(tape, bb, tok).output, tok.mask, pooling);
        std::copy_n(pooled.value().data(), d, x.data() + v * d);
    }
    return x;
}

void save_features(const std::filesystem::path& gtsr_path, const std::filesystem::path& sidecar_path, const Tensor& x,
                   Pooling pooling, const PromptSpec& prompt) {
    num::save_gtsr(gtsr_path, x);
    nlohmann::ordered_json j;
    j["n"] = x.rows();
    j["d"] = x.cols();
    j["pooling"] = to_string(pooling);
    j["prompt"] = prompt.prefix;
    std::ofstream out(sidecar_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + sidecar_path.string());
    out << j.dump(2) << '\n';
}

}  // namespace galora::enc
