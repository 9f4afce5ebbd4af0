// SPDX-FileCopyrightText: © 2026 The galora authors
//
// SPDX-License-Identifier: Apache-2.0

#include "galora/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "galora/metrics.hpp"
#include "galora/ops.hpp"
#include "galora/optim.hpp"
#include "galora/rng.hpp"

namespace galora::train {

using num::Tensor;
using num::Var;

std::string_view to_string(BaselineMode m) {
    switch (m) {
        case BaselineMode::galora: return "galora";
        case BaselineMode::text_only: return "text_only";
        case BaselineMode::lora_only: return "lora_only";
    }
    return "unknown";
}

BaselineMode parse_baseline(std::string_view s) {
    if (s == "galora") return BaselineMode::galora;
    if (s == "text_only") return BaselineMode::text_only;
    if (s == "lora_only") return BaselineMode::lora_only;
    throw std::invalid_argument("unknown baseline '" + std::string(s) + "' (expected galora|text_only|lora_only)");
}

fusion::Placement RunConfig::placement_for(std::size_t num_layers) const {
    return placement ? *placement : fusion::Placement::default_for(num_layers);
}

std::size_t RunConfig::first_adapted_layer(std::size_t num_layers) const {
    if (!uses_fusion() && !uses_lora()) return num_layers;
    const auto layers = placement_for(num_layers).all_layers();
    return layers.empty() ? num_layers : layers.front();
}

void RunConfig::validate(const enc::BackboneConfig& backbone) const {
    if (!(lr > 0.0) || !std::isfinite(lr)) throw std::invalid_argument("trainer: lr must be positive");
    if (!(weight_decay >= 0.0)) throw std::invalid_argument("trainer: weight_decay must be non-negative");
    if (batch_size == 0) throw std::invalid_argument("trainer: batch_size must be at least 1");
    if (seeds.empty()) throw std::invalid_argument("trainer: seed list is empty");
    if (seq_len < 4 || seq_len > backbone.max_len) {
        throw std::invalid_argument("trainer: seq_len " + std::to_string(seq_len) + " outside [4, " +
                                    std::to_string(backbone.max_len) + "]");
    }
    if (rank == 0) throw std::invalid_argument("trainer: rank must be at least 1");
    placement_for(backbone.layers).validate(backbone.layers);
    enc::lora_target_shapes(backbone, lora_targets);
    if (tie_fusion_to_lora &&
        std::find(lora_targets.begin(), lora_targets.end(), enc::kOutProjection) == lora_targets.end()) {
        throw std::invalid_argument("trainer: tying fusion to LoRA needs the attn_out target");
    }
}

namespace {

bool ties_active(const RunConfig& c) { return c.tie_fusion_to_lora && c.uses_fusion() && c.uses_lora(); }

}  // namespace

Phase2Assembly::Phase2Assembly(const enc::EncoderBackbone& backbone, const sage::SageEmbeddings& embeddings,
                               std::size_t num_classes, const RunConfig& config, std::uint64_t seed)
    : backbone_(&backbone), embeddings_(&embeddings), config_(config), num_classes_(num_classes) {
    const auto& bc = backbone.config();
    config_.validate(bc);
    if (num_classes < 2) throw std::invalid_argument("phase-2 assembly needs at least 2 classes");
    if (embeddings.pass1.empty() || embeddings.pass2.empty()) {
        throw std::invalid_argument("phase-2 assembly: missing structural embeddings (run phase 1 first)");
    }
    const fusion::Placement placement = config_.placement_for(bc.layers);
    const auto layers = placement.all_layers();
    if (config_.uses_lora()) {
        const auto targets = enc::lora_target_shapes(bc, config_.lora_targets);
        lora_ = fusion::LoraSet::build(layers, targets, config_.rank, seed);
    }
    if (config_.uses_fusion()) {
        fusion_ = fusion::FusionAdapterSet::build(bc.layers, placement, config_.rank, bc.d_model,
                                                  embeddings.pass1.cols(), seed);
        if (ties_active(config_)) fusion_.tie_to_lora(lora_, enc::kOutProjection);
    }
    Rng rng = Rng::stream(seed, 0x68656164ULL);
    head_w_ = num::make_param("head.W", num::normal_tensor(num_classes, bc.d_model, 0.02, rng));
    head_b_ = num::make_param("head.b", Tensor(1, num_classes, 0.0));
}

num::ParamList Phase2Assembly::trainable() const {
    num::ParamList out = fusion_.parameters();
    for (const auto& p : lora_.parameters()) {
        if (std::find(out.begin(), out.end(), p) == out.end()) out.push_back(p);
    }
    out.push_back(head_w_);
    out.push_back(head_b_);
    return out;
}

fusion::ParameterRegistry Phase2Assembly::registry(const std::optional<sage::SageConfig>& gnn) const {
    using fusion::Component;
    fusion::ParameterRegistry reg;
    reg.add(backbone_->parameters(), Component::backbone, false);
    if (gnn) {
        for (bool layers : {true, false}) {
            for (auto& [name, shape] : sage::sage_parameter_shapes(*gnn, layers)) {
                reg.add_shape(name, shape, Component::gnn, true);
            }
        }
    }
    // LoRA first so that tied fusion matrices are attributed to the pair that owns them.
    reg.add(lora_.parameters(), Component::lora_pairs, true);
    reg.add(fusion_.parameters(), Component::fusion, true);
    reg.add(head_w_, Component::classifier_head, true);
    reg.add(head_b_, Component::classifier_head, true);
    return reg;
}

fusion::ParamAudit Phase2Assembly::audit(const std::optional<sage::SageConfig>& gnn) const {
    return fusion::audit_parameters(registry(gnn));
}

fusion::ParameterRegistry describe_assembly(const enc::BackboneConfig& backbone, const sage::SageConfig& gnn,
                                            const RunConfig& config, std::size_t num_classes) {
    using fusion::Component;
    config.validate(backbone);
    fusion::ParameterRegistry reg;
    for (auto& [name, shape] : enc::backbone_parameter_shapes(backbone)) {
        reg.add_shape(name, shape, Component::backbone, false);
    }
    for (bool layers : {true, false}) {
        for (auto& [name, shape] : sage::sage_parameter_shapes(gnn, layers)) {
            reg.add_shape(name, shape, Component::gnn, true);
        }
    }
    const std::size_t r = config.rank, d = backbone.d_model;
    const fusion::Placement placement = config.placement_for(backbone.layers);
    if (config.uses_lora()) {
        for (std::size_t l : placement.all_layers()) {
            for (const auto& t : enc::lora_target_shapes(backbone, config.lora_targets)) {
                const std::string p = "lora." + std::to_string(l) + "." + t.name;
                reg.add_shape(p + ".A", {r, t.d_in}, Component::lora_pairs, true);
                reg.add_shape(p + ".B", {t.d_out, r}, Component::lora_pairs, true);
            }
        }
    }
    if (config.uses_fusion()) {
        const bool tied = ties_active(config);
        for (std::size_t l : placement.all_layers()) {
            const std::string p = "fusion." + std::to_string(l);
            if (!tied) reg.add_shape(p + ".W_A", {r, d}, Component::fusion, true);
            reg.add_shape(p + ".W_B", {r, gnn.hidden}, Component::fusion, true);
            if (!tied) reg.add_shape(p + ".W_C", {d, r}, Component::fusion, true);
            reg.add_shape(p + ".gate_logit", {1, 1}, Component::fusion, true);
        }
    }
    reg.add_shape("head.W", {num_classes, d}, Component::classifier_head, true);
    reg.add_shape("head.b", {1, num_classes}, Component::classifier_head, true);
    return reg;
}

PreparedInputs prepare_inputs(const enc::EncoderBackbone& backbone, const tag::TextAttributedGraph& graph,
                              const enc::Vocabulary& vocab, const RunConfig& config) {
    config.validate(backbone.config());
    if (vocab.size() > backbone.config().vocab_size) {
        throw std::invalid_argument("vocabulary has " + std::to_string(vocab.size()) + " entries, embedding table " +
                                    std::to_string(backbone.config().vocab_size));
    }
    const std::size_t L = backbone.config().layers;
    PreparedInputs out;
    out.start_layer = config.first_adapted_layer(L);
    out.pooling = config.pooling;
    const enc::PromptSpec prompt{config.prompt};
    out.tokens.reserve(graph.num_nodes());
    out.cache.reserve(graph.num_nodes());
    for (tag::NodeId v = 0; v < graph.num_nodes(); ++v) {
        out.tokens.push_back(enc::tokenize(graph.node(v).text, prompt, vocab, config.seq_len).visible_prefix());
        const auto& tok = out.tokens.back();
        num::Tape tape(false);
        Var x = enc::embed(tape, backbone, tok.ids);
        x = enc::run_blocks(tape, backbone, x, tok.mask, 0, out.start_layer);
        if (out.start_layer == L) x = enc::pool(enc::final_norm(tape, backbone, x), tok.mask, config.pooling);
        out.cache.push_back(x.value());
    }
    return out;
}

Var node_logits(num::Tape& tape, const Phase2Assembly& as, const PreparedInputs& in, tag::NodeId v) {
    const auto& bb = as.backbone();
    const std::size_t L = bb.config().layers;
    if (v >= in.cache.size()) throw std::out_of_range("node_logits: node " + std::to_string(v) + " not prepared");
    if (in.start_layer > as.config().first_adapted_layer(L)) {
        throw std::invalid_argument("node_logits: inputs were prepared past the first adapted layer");
    }
    Var pooled;
    if (in.start_layer < L) {
        const auto& tok = in.tokens[v];
        enc::Injection inj;
        inj.fusion = &as.fusion();
        inj.lora = &as.lora();
        inj.form = as.config().fusion_form;
        const auto& emb = as.embeddings();
        if (v >= emb.pass1.rows()) throw std::out_of_range("node_logits: no structural embedding for node " + std::to_string(v));
        inj.pass1 = tape.constant(Tensor::row(emb.pass1.row_span(v)));
        inj.pass2 = tape.constant(Tensor::row(emb.pass2.row_span(v)));
        Var x = tape.constant(in.cache[v]);
        x = enc::run_blocks(tape, bb, x, tok.mask, in.start_layer, L, &inj);
        pooled = enc::pool(enc::final_norm(tape, bb, x), tok.mask, in.pooling);
    } else {
        pooled = tape.constant(in.cache[v]);
    }
    return num::linear(pooled, tape.param(as.head_weight()), tape.param(as.head_bias()));
}

namespace {

Tensor logits_for(const Phase2Assembly& as, const PreparedInputs& in, std::span<const tag::NodeId> ids) {
    Tensor out(ids.size(), as.num_classes());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        num::Tape tape(false);
        const Var z = node_logits(tape, as, in, ids[i]);
        std::copy_n(z.value().data(), as.num_classes(), out.data() + i * as.num_classes());
    }
    return out;
}

std::vector<std::size_t> labels_of(const tag::TextAttributedGraph& graph, std::span<const tag::NodeId> ids) {
    std::vector<std::size_t> out;
    out.reserve(ids.size());
    for (tag::NodeId v : ids) out.push_back(graph.node(v).label);
    return out;
}

}  // namespace

double evaluate(const Phase2Assembly& as, const PreparedInputs& in, const tag::TextAttributedGraph& graph,
                tag::Split split) {
    const auto ids = graph.nodes_in_split(split);
    if (ids.empty()) throw tag::DataError("evaluate: split '" + std::string(tag::to_string(split)) + "' is empty");
    return metrics::primary_metric(logits_for(as, in, ids), labels_of(graph, ids));
}

SeedResult train_phase2(Phase2Assembly& as, const PreparedInputs& in, const tag::TextAttributedGraph& graph,
                        std::uint64_t seed) {
    if (!graph.has_splits()) throw tag::DataError("train_phase2: graph has no split assignment");
    if (in.cache.size() != graph.num_nodes()) throw std::invalid_argument("train_phase2: inputs prepared for another graph");
    const RunConfig& cfg = as.config();
    std::vector<tag::NodeId> train_ids = graph.nodes_in_split(tag::Split::train);
    if (train_ids.empty()) throw tag::DataError("train_phase2: empty train split");

    const num::ParamList params = as.trainable();
    num::AdamW opt(params, {.lr = cfg.lr, .weight_decay = cfg.weight_decay});
    Rng shuffle_rng = Rng::stream(seed, 0x73687566ULL);

    auto snapshot = [&] {
        std::vector<Tensor> s;
        s.reserve(params.size());
        for (const auto& p : params) s.push_back(p->value);
        return s;
    };

    SeedResult res;
    res.seed = seed;
    res.best_val_metric = evaluate(as, in, graph, tag::Split::val);
    res.val_trace.push_back(res.best_val_metric);
    std::vector<Tensor> best = snapshot();

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(train_ids);
        double loss_sum = 0.0;
        for (std::size_t begin = 0; begin < train_ids.size(); begin += cfg.batch_size) {
            const std::size_t end = std::min(train_ids.size(), begin + cfg.batch_size);
            const std::span<const tag::NodeId> batch(train_ids.data() + begin, end - begin);
            double batch_loss = 0.0;
            try {
                num::Tape tape;
                std::vector<Var> rows;
                rows.reserve(batch.size());
                for (tag::NodeId v : batch) rows.push_back(node_logits(tape, as, in, v));
                const Var loss = num::cross_entropy(num::stack_rows(rows), labels_of(graph, batch));
                batch_loss = loss.value()[0];
                opt.zero_grad();
                tape.backward(loss);
            } catch (const num::NonFiniteError& e) {
                throw num::NonFiniteError("phase-2 seed " + std::to_string(seed) + " epoch " + std::to_string(epoch) +
                                          ": " + e.what());
            }
            if (!std::isfinite(batch_loss)) {
                throw num::NonFiniteError("phase-2 seed " + std::to_string(seed) + " epoch " + std::to_string(epoch) +
                                          ": non-finite loss");
            }
            opt.step();
            loss_sum += batch_loss * static_cast<double>(batch.size());
        }
        res.loss_trace.push_back(loss_sum / static_cast<double>(train_ids.size()));
        res.epochs_run = epoch;

        const double v = evaluate(as, in, graph, tag::Split::val);
        res.val_trace.push_back(v);
        spdlog::debug("phase 2 seed {} epoch {}: loss {:.5f} val {:.4f}", seed, epoch, res.loss_trace.back(), v);
        if (v > res.best_val_metric) {
            res.best_val_metric = v;
            res.best_epoch = epoch;
            best = snapshot();
        } else if (epoch - res.best_epoch >= cfg.patience) {
            break;
        }
    }
    for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = best[i];
    num::zero_grads(params);
    if (!graph.nodes_in_split(tag::Split::test).empty()) res.test_metric = evaluate(as, in, graph, tag::Split::test);
    spdlog::info("phase 2 [{}] seed {}: best val {:.4f} at epoch {}, test {:.4f}", to_string(cfg.mode), seed,
                 res.best_val_metric, res.best_epoch, res.test_metric);
    return res;
}

Statistics summarize(const std::vector<double>& values) {
    Statistics s;
    if (values.empty()) return s;
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
        double sq = 0.0;
        for (double v : values) sq += (v - s.mean) * (v - s.mean);
        s.std_dev = std::sqrt(sq / static_cast<double>(values.size() - 1));
    }
    return s;
}

RunReport aggregate(std::vector<SeedResult> results, BaselineMode mode, std::string metric_name,
                    const fusion::ParamAudit& audit) {
    std::sort(results.begin(), results.end(), [](const SeedResult& a, const SeedResult& b) { return a.seed < b.seed; });
    RunReport r;
    r.mode = mode;
    r.metric_name = std::move(metric_name);
    std::vector<double> metrics;
    for (const auto& s : results) metrics.push_back(s.test_metric);
    const Statistics st = summarize(metrics);
    r.mean = st.mean;
    r.std_dev = st.std_dev;
    r.seeds = std::move(results);
    r.audit = audit;
    return r;
}

nlohmann::ordered_json RunReport::to_json() const {
    nlohmann::ordered_json j;
    j["mode"] = to_string(mode);
    j["metric"] = metric_name;
    j["mean"] = mean;
    if (std_dev) j["std"] = *std_dev;
    auto& arr = j["seeds"] = nlohmann::ordered_json::array();
    for (const auto& s : seeds) {
        nlohmann::ordered_json e;
        e["seed"] = s.seed;
        e["test_metric"] = s.test_metric;
        e["best_val_metric"] = s.best_val_metric;
        e["best_epoch"] = s.best_epoch;
        e["epochs_run"] = s.epochs_run;
        e["loss_trace"] = s.loss_trace;
        e["val_trace"] = s.val_trace;
        arr.push_back(std::move(e));
    }
    j["audit"] = audit.to_json();
    return j;
}

RunReport seed_sweep(const Phase2Inputs& inputs, const RunConfig& config, const SeedCallback& on_seed) {
    if (!inputs.backbone || !inputs.graph || !inputs.vocab) throw std::invalid_argument("seed_sweep: incomplete inputs");
    return seed_sweep(inputs, prepare_inputs(*inputs.backbone, *inputs.graph, *inputs.vocab, config), config, on_seed);
}

RunReport seed_sweep(const Phase2Inputs& inputs, const PreparedInputs& prepared, const RunConfig& config,
                     const SeedCallback& on_seed) {
    if (!inputs.backbone || !inputs.graph || !inputs.embeddings) {
        throw std::invalid_argument("seed_sweep: incomplete inputs");
    }
    const auto start = std::chrono::steady_clock::now();
    std::vector<SeedResult> results;
    fusion::ParamAudit audit;
    for (std::uint64_t seed : config.seeds) {
        Phase2Assembly as(*inputs.backbone, *inputs.embeddings, inputs.graph->num_classes(), config, seed);
        results.push_back(train_phase2(as, prepared, *inputs.graph, seed));
        audit = as.audit(inputs.gnn);
        if (on_seed) on_seed(as, results.back());
    }
    RunReport r = aggregate(std::move(results), config.mode,
                            std::string(metrics::metric_name(inputs.graph->num_classes())), audit);
    r.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

void save_adapters(const std::filesystem::path& dir, const Phase2Assembly& as) {
    std::filesystem::create_directories(dir);
    for (const auto& p : as.trainable()) num::save_gtsr(dir / (p->name + ".gtsr"), p->value);
    nlohmann::ordered_json j;
    j["rank"] = as.config().rank;
    j["fusion_form"] = fusion::to_string(as.config().fusion_form);
    auto& ads = j["adapters"] = nlohmann::ordered_json::array();
    for (const auto& ad : as.fusion().adapters()) {
        nlohmann::ordered_json e;
        e["layer"] = ad.layer;
        e["source"] = fusion::to_string(ad.source);
        e["r"] = ad.rank();
        e["gate_logit"] = ad.gate_logit->value[0];
        e["tensors"] = {ad.w_a->name, ad.w_b->name, ad.w_c->name, ad.gate_logit->name};
        ads.push_back(std::move(e));
    }
    auto& pairs = j["lora"] = nlohmann::ordered_json::array();
    for (const auto& p : as.lora().pairs()) {
        pairs.push_back({{"layer", p.layer}, {"target", p.target}, {"r", p.rank()}, {"scaling", p.scaling}});
    }
    j["targets"] = as.config().lora_targets;
    j["head"] = {as.head_weight()->name, as.head_bias()->name};
    std::ofstream out(dir / "adapters.json", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (dir / "adapters.json").string());
    out << j.dump(2) << '\n';
}

void load_adapters(const std::filesystem::path& dir, Phase2Assembly& as) {
    for (const auto& p : as.trainable()) {
        const auto path = dir / (p->name + ".gtsr");
        if (!std::filesystem::exists(path)) {
            throw tag::DataError("missing adapter tensor " + path.string() + " (run the phase2 command first)");
        }
        Tensor t = num::load_gtsr(path);
        if (!t.same_shape(p->value)) {
            throw tag::DataError("adapter tensor " + path.string() + " has shape " + num::shape_string(t.shape()) +
                                 ", expected " + num::shape_string(p->value.shape()));
        }
        p->value = std::move(t);
    }
}

}  // namespace galora::train
