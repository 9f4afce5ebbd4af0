// SPDX-FileCopyrightText: © 2026 The galora authors
//
// SPDX-License-Identifier: Apache-2.0

#include "galora/ablation.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

namespace galora::train {

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

AblationRow row_from(const RunReport& r, std::string label) {
    AblationRow row;
    row.label = std::move(label);
    row.metric_mean = r.mean;
    row.metric_std = r.std_dev;
    row.trainable_params = r.audit.phase2_trainable;
    return row;
}

}  // namespace

std::string AblationTable::to_csv() const {
    std::string out = kind + ",metric_mean,metric_std,trainable_params\n";
    for (const auto& r : rows) {
        out += fmt::format("{},{:.6f},{},{}\n", csv_field(r.label), r.metric_mean,
                           r.metric_std ? fmt::format("{:.6f}", *r.metric_std) : std::string(), r.trainable_params);
    }
    return out;
}

std::string AblationTable::to_text() const {
    std::size_t width = kind.size();
    for (const auto& r : rows) width = std::max(width, r.label.empty() ? 6 : r.label.size());
    std::string out = fmt::format("{:<{}}  {:>12}  {:>10}  {:>16}\n", kind, width, metric_name + "_mean", "std",
                                  "trainable_params");
    for (const auto& r : rows) {
        out += fmt::format("{:<{}}  {:>12.4f}  {:>10}  {:>16}\n", r.label.empty() ? "(none)" : r.label, width,
                           r.metric_mean, r.metric_std ? fmt::format("{:.4f}", *r.metric_std) : "-",
                           r.trainable_params);
    }
    return out;
}

AblationTable rank_ablation(const Phase2Inputs& inputs, const RunConfig& base, std::span<const std::size_t> ranks) {
    if (ranks.empty()) throw std::invalid_argument("rank_ablation: no ranks given");
    if (std::find(ranks.begin(), ranks.end(), std::size_t{0}) != ranks.end()) {
        throw std::invalid_argument("rank_ablation: rank must be at least 1");
    }
    if (!inputs.backbone || !inputs.graph || !inputs.vocab) throw std::invalid_argument("rank_ablation: incomplete inputs");
    const PreparedInputs prepared = prepare_inputs(*inputs.backbone, *inputs.graph, *inputs.vocab, base);
    AblationTable table;
    table.kind = "rank";
    for (std::size_t r : ranks) {
        RunConfig cfg = base;
        cfg.rank = r;
        const RunReport rep = seed_sweep(inputs, prepared, cfg);
        table.metric_name = rep.metric_name;
        AblationRow row = row_from(rep, std::to_string(r));
        row.rank = r;
        row.prompt = base.prompt;
        table.rows.push_back(std::move(row));
    }
    return table;
}

AblationTable prompt_ablation(const Phase2Inputs& inputs, const RunConfig& base, std::span<const std::string> prompts) {
    if (prompts.empty()) throw std::invalid_argument("prompt_ablation: no prompts given");
    AblationTable table;
    table.kind = "prompt";
    for (const auto& p : prompts) {
        RunConfig cfg = base;
        cfg.prompt = p;
        const RunReport rep = seed_sweep(inputs, cfg);
        table.metric_name = rep.metric_name;
        AblationRow row = row_from(rep, p);
        row.rank = base.rank;
        row.prompt = p;
        table.rows.push_back(std::move(row));
    }
    return table;
}

}  // namespace galora::train
