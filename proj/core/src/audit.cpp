// SPDX-FileCopyrightText: © 2026 The galora authors
//
// SPDX-License-Identifier: Apache-2.0

#include "galora/audit.hpp"

#include <algorithm>
#include <cstdio>
#include <functional>
#include <numeric>

namespace galora::fusion {

std::string_view to_string(Component c) {
    switch (c) {
        case Component::backbone: return "backbone";
        case Component::gnn: return "gnn";
        case Component::fusion: return "fusion";
        case Component::lora_pairs: return "lora_pairs";
        case Component::classifier_head: return "classifier_head";
    }
    return "unknown";
}

std::size_t RegistryEntry::size() const {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

void ParameterRegistry::add(const num::ParamPtr& param, Component component, bool trainable) {
    if (std::find(seen_.begin(), seen_.end(), param.get()) != seen_.end()) return;
    seen_.push_back(param.get());
    entries_.push_back(RegistryEntry{param->name, param->value.shape(), component, trainable});
}

void ParameterRegistry::add(std::span<const num::ParamPtr> params, Component component, bool trainable) {
    for (const auto& p : params) add(p, component, trainable);
}

void ParameterRegistry::add_shape(std::string name, num::Shape shape, Component component, bool trainable) {
    entries_.push_back(RegistryEntry{std::move(name), std::move(shape), component, trainable});
}

ParamAudit audit_parameters(const ParameterRegistry& registry) {
    ParamAudit a;
    for (const auto& e : registry.entries()) {
        const std::size_t n = e.size();
        if (e.component == Component::backbone) {
            a.backbone_total += n;
            continue;
        }
        if (!e.trainable) continue;
        switch (e.component) {
            case Component::gnn: a.gnn += n; break;
            case Component::fusion: a.fusion += n; break;
            case Component::lora_pairs: a.lora_pairs += n; break;
            case Component::classifier_head: a.classifier_head += n; break;
            case Component::backbone: break;
        }
    }
    a.phase2_trainable = a.fusion + a.lora_pairs + a.classifier_head;
    a.total_trainable = a.gnn + a.phase2_trainable;
    a.relative_fraction =
        a.backbone_total ? static_cast<double>(a.total_trainable) / static_cast<double>(a.backbone_total) : 0.0;
    return a;
}

nlohmann::ordered_json ParamAudit::to_json() const {
    nlohmann::ordered_json j;
    j["gnn"] = gnn;
    j["fusion"] = fusion;
    j["lora_pairs"] = lora_pairs;
    j["classifier_head"] = classifier_head;
    j["phase2_trainable"] = phase2_trainable;
    j["total_trainable"] = total_trainable;
    j["backbone_total"] = backbone_total;
    j["relative_fraction"] = relative_fraction;
    return j;
}

std::string ParamAudit::to_table() const {
    std::string out;
    char line[96];
    auto row = [&](const char* name, std::size_t v) {
        std::snprintf(line, sizeof line, "%-18s %14zu\n", name, v);
        out += line;
    };
    row("gnn", gnn);
    row("fusion", fusion);
    row("lora_pairs", lora_pairs);
    row("classifier_head", classifier_head);
    row("phase2_trainable", phase2_trainable);
    row("total_trainable", total_trainable);
    row("backbone_total", backbone_total);
    std::snprintf(line, sizeof line, "%-18s %13.4f%%\n", "relative_fraction", 100.0 * relative_fraction);
    out += line;
    return out;
}

}  // namespace galora::fusion
