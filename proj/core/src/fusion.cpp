// SPDX-FileCopyrightText: © 2026 The galora authors
//
// SPDX-License-Identifier: Apache-2.0

#include "galora/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "galora/rng.hpp"

namespace galora::fusion {

using num::Tensor;
using num::Var;

std::string_view to_string(StructureSource s) { return s == StructureSource::pass1 ? "pass1" : "pass2"; }

std::string_view to_string(FusionForm f) { return f == FusionForm::residual ? "residual" : "replace"; }

FusionForm parse_fusion_form(std::string_view s) {
    if (s == "residual") return FusionForm::residual;
    if (s == "replace") return FusionForm::replace;
    throw std::invalid_argument("unknown fusion form '" + std::string(s) + "' (expected residual|replace)");
}

double FusionAdapter::gate() const {
    const double z = gate_logit->value[0];
    return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

num::ParamList FusionAdapter::parameters() const { return {w_a, w_b, w_c, gate_logit}; }

Var fusion_apply(num::Tape& tape, const FusionAdapter& ad, Var h1, Var h2, FusionForm form) {
    const Tensor& hv = h1.value();
    const Tensor& gv = h2.value();
    if (hv.cols() != ad.model_dim()) {
        throw num::ShapeError("fusion_apply: hidden width " + std::to_string(hv.cols()) + " vs W_A " +
                              num::shape_string(ad.w_a->value.shape()));
    }
    if (gv.rows() != 1 || gv.cols() != ad.graph_dim()) {
        throw num::ShapeError("fusion_apply: graph embedding " + num::shape_string(gv.shape()) + " vs W_B " +
                              num::shape_string(ad.w_b->value.shape()));
    }
    if (ad.w_c->value.rows() != ad.model_dim() || ad.w_c->value.cols() != ad.rank() ||
        ad.w_b->value.rows() != ad.rank()) {
        throw num::ShapeError("fusion_apply: inconsistent adapter shapes W_A " +
                              num::shape_string(ad.w_a->value.shape()) + ", W_B " +
                              num::shape_string(ad.w_b->value.shape()) + ", W_C " +
                              num::shape_string(ad.w_c->value.shape()));
    }
    const Var alpha = num::sigmoid(tape.param(ad.gate_logit));
    const Var text = num::scale_by(num::linear(h1, tape.param(ad.w_a)), alpha);
    const Var graph = num::scale_by(num::linear(h2, tape.param(ad.w_b)), num::one_minus(alpha));
    const Var mixed = num::add(text, num::broadcast_rows(graph, hv.rows()));
    const Var z = num::linear(mixed, tape.param(ad.w_c));
    return form == FusionForm::residual ? num::add(h1, z) : z;
}

Placement Placement::default_for(std::size_t num_layers) {
    if (num_layers < 2) throw std::invalid_argument("placement needs at least 2 layers");
    const std::size_t count = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(num_layers / 4.0)));
    const std::size_t middle_end = (2 * num_layers) / 3;
    Placement p;
    for (std::size_t l = middle_end - std::min(count, middle_end); l < middle_end; ++l) p.pass1_layers.push_back(l);
    for (std::size_t l = num_layers - count; l < num_layers; ++l) p.pass2_layers.push_back(l);
    return p;
}

void Placement::validate(std::size_t num_layers) const {
    std::set<std::size_t> seen;
    for (const auto* list : {&pass1_layers, &pass2_layers}) {
        for (std::size_t l : *list) {
            if (l >= num_layers) {
                throw std::invalid_argument("placement: layer " + std::to_string(l) + " out of range for " +
                                            std::to_string(num_layers) + " layers");
            }
            if (!seen.insert(l).second) throw std::invalid_argument("placement: layer " + std::to_string(l) + " listed twice");
        }
    }
    if (!pass1_layers.empty() && !pass2_layers.empty()) {
        const auto p1max = *std::max_element(pass1_layers.begin(), pass1_layers.end());
        const auto p2min = *std::min_element(pass2_layers.begin(), pass2_layers.end());
        if (p1max >= p2min) {
            throw std::invalid_argument("placement: Pass-1 layers must lie strictly below Pass-2 layers");
        }
    }
}

std::vector<std::size_t> Placement::all_layers() const {
    std::vector<std::size_t> out = pass1_layers;
    out.insert(out.end(), pass2_layers.begin(), pass2_layers.end());
    std::sort(out.begin(), out.end());
    return out;
}

Var lora_apply(num::Tape& tape, const LoraPair& pair, Var frozen_w, Var x, std::optional<Var> bias) {
    const Tensor& wv = frozen_w.value();
    if (pair.a->value.cols() != wv.cols() || pair.b->value.rows() != wv.rows() ||
        pair.b->value.cols() != pair.a->value.rows()) {
        throw num::ShapeError("lora_apply: W " + num::shape_string(wv.shape()) + " vs A " +
                              num::shape_string(pair.a->value.shape()) + ", B " +
                              num::shape_string(pair.b->value.shape()));
    }
    const Var base = num::linear(x, frozen_w, bias);
    Var delta = num::linear(num::linear(x, tape.param(pair.a)), tape.param(pair.b));
    if (pair.scaling != 1.0) delta = num::scale(delta, pair.scaling);
    return num::add(base, delta);
}

LoraSet LoraSet::build(std::span<const std::size_t> layers, std::span<const LoraTargetShape> targets,
                       std::size_t rank, std::uint64_t seed, double scaling) {
    if (rank == 0) throw std::invalid_argument("LoRA rank must be at least 1");
    LoraSet set;
    Rng rng = Rng::stream(seed, 0x6c6f7261ULL);
    for (std::size_t layer : layers) {
        for (const auto& t : targets) {
            const std::string prefix = "lora." + std::to_string(layer) + "." + t.name;
            LoraPair p;
            p.layer = layer;
            p.target = t.name;
            p.a = num::make_param(prefix + ".A", num::normal_tensor(rank, t.d_in, 0.02, rng));
            p.b = num::make_param(prefix + ".B", Tensor(t.d_out, rank, 0.0));
            p.scaling = scaling;
            set.pairs_.push_back(std::move(p));
        }
    }
    return set;
}

const LoraPair* LoraSet::find(std::size_t layer, std::string_view target) const {
    for (const auto& p : pairs_) {
        if (p.layer == layer && p.target == target) return &p;
    }
    return nullptr;
}

num::ParamList LoraSet::parameters() const {
    num::ParamList out;
    for (const auto& p : pairs_) {
        out.push_back(p.a);
        out.push_back(p.b);
    }
    return out;
}

std::size_t LoraSet::trainable_count() const {
    std::size_t n = 0;
    for (const auto& p : pairs_) n += p.trainable_count();
    return n;
}

FusionAdapterSet FusionAdapterSet::build(std::size_t num_layers, const Placement& placement, std::size_t rank,
                                         std::size_t model_dim, std::size_t graph_dim, std::uint64_t seed) {
    placement.validate(num_layers);
    if (rank == 0) throw std::invalid_argument("fusion rank must be at least 1");
    if (model_dim == 0 || graph_dim == 0) throw std::invalid_argument("fusion dimensions must be positive");
    FusionAdapterSet set;
    Rng rng = Rng::stream(seed, 0x667573696f6eULL);
    auto make = [&](std::size_t layer, StructureSource src) {
        const std::string prefix = "fusion." + std::to_string(layer);
        FusionAdapter ad;
        ad.layer = layer;
        ad.source = src;
        ad.w_a = num::make_param(prefix + ".W_A", num::normal_tensor(rank, model_dim, 0.02, rng));
        ad.w_b = num::make_param(prefix + ".W_B", num::normal_tensor(rank, graph_dim, 0.02, rng));
        ad.w_c = num::make_param(prefix + ".W_C", Tensor(model_dim, rank, 0.0));
        ad.gate_logit = num::make_param(prefix + ".gate_logit", Tensor::scalar(0.0));
        set.adapters_.push_back(std::move(ad));
    };
    for (std::size_t l : placement.pass1_layers) make(l, StructureSource::pass1);
    for (std::size_t l : placement.pass2_layers) make(l, StructureSource::pass2);
    std::sort(set.adapters_.begin(), set.adapters_.end(),
              [](const FusionAdapter& a, const FusionAdapter& b) { return a.layer < b.layer; });
    return set;
}

void FusionAdapterSet::tie_to_lora(const LoraSet& lora, std::string_view target) {
    for (auto& ad : adapters_) {
        const LoraPair* pair = lora.find(ad.layer, target);
        if (!pair) {
            throw std::invalid_argument("tie_to_lora: no '" + std::string(target) + "' pair on layer " +
                                        std::to_string(ad.layer));
        }
        if (!pair->a->value.same_shape(ad.w_a->value) || !pair->b->value.same_shape(ad.w_c->value)) {
            throw num::ShapeError("tie_to_lora: pair shapes A " + num::shape_string(pair->a->value.shape()) + ", B " +
                                  num::shape_string(pair->b->value.shape()) + " do not match W_A/W_C");
        }
        ad.w_a = pair->a;
        ad.w_c = pair->b;
    }
}

const FusionAdapter* FusionAdapterSet::at(std::size_t layer) const {
    for (const auto& ad : adapters_) {
        if (ad.layer == layer) return &ad;
    }
    return nullptr;
}

num::ParamList FusionAdapterSet::parameters() const {
    num::ParamList out;
    std::set<const num::Parameter*> seen;
    for (const auto& ad : adapters_) {
        for (const auto& p : ad.parameters()) {
            if (seen.insert(p.get()).second) out.push_back(p);
        }
    }
    return out;
}

}  // namespace galora::fusion
