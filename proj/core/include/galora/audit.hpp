// SPDX-FileCopyrightText: © 2026 The galora authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "galora/autodiff.hpp"

namespace galora::fusion {

enum class Component { backbone, gnn, fusion, lora_pairs, classifier_head };

std::string_view to_string(Component c);

struct RegistryEntry {
    std::string name;
    num::Shape shape;
    Component component = Component::backbone;
    bool trainable = false;

    std::size_t size() const;
};

/**
 * Flat list of every tensor in a model assembly. Entries may come from live
 * parameters or from shapes alone; a live parameter registered twice (tied
 * weights) is recorded once.
 */
class ParameterRegistry {
public:
    void add(const num::ParamPtr& param, Component component, bool trainable);
    void add(std::span<const num::ParamPtr> params, Component component, bool trainable);
    void add_shape(std::string name, num::Shape shape, Component component, bool trainable);

    std::span<const RegistryEntry> entries() const noexcept { return entries_; }

private:
    std::vector<RegistryEntry> entries_;
    std::vector<const num::Parameter*> seen_;
};

/**
 * Trainable counts per component.
 *
 * `total_trainable` is the sum over all four components and
 * `relative_fraction` = total_trainable / backbone_total. `phase2_trainable`
 * leaves out the GNN, which is trained in phase 1 only.
 */
struct ParamAudit {
    std::size_t gnn = 0;
    std::size_t fusion = 0;
    std::size_t lora_pairs = 0;
    std::size_t classifier_head = 0;
    std::size_t phase2_trainable = 0;
    std::size_t total_trainable = 0;
    std::size_t backbone_total = 0;
    double relative_fraction = 0.0;

    nlohmann::ordered_json to_json() const;
    /// Aligned two-column component table.
    std::string to_table() const;
};

ParamAudit audit_parameters(const ParameterRegistry& registry);

}  // namespace galora::fusion
