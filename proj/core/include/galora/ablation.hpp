// SPDX-FileCopyrightText: © 2026 The galora authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "galora/trainer.hpp"

namespace galora::train {

struct AblationRow {
    std::string label;
    std::size_t rank = 0;
    std::string prompt;
    double metric_mean = 0.0;
    std::optional<double> metric_std;
    std::size_t trainable_params = 0;
};

struct AblationTable {
    /// "rank" or "prompt"; names the first column.
    std::string kind;
    std::string metric_name;
    std::vector<AblationRow> rows;

    /// Header `<kind>,metric_mean,metric_std,trainable_params`; a missing std is left empty.
    std::string to_csv() const;
    std::string to_text() const;
};

/// One seed sweep per rank, in the given order. Throws std::invalid_argument for an empty list or rank 0.
AblationTable rank_ablation(const Phase2Inputs& inputs, const RunConfig& base, std::span<const std::size_t> ranks);

/// One seed sweep per prompt, in the given order. Throws std::invalid_argument for an empty list.
AblationTable prompt_ablation(const Phase2Inputs& inputs, const RunConfig& base, std::span<const std::string> prompts);

}  // namespace galora::train
