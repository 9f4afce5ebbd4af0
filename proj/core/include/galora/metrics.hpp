// SPDX-FileCopyrightText: © 2026 The galora authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string_view>

#include "galora/tensor.hpp"

namespace galora::metrics {

/// Row argmax, ties to the lowest index.
std::size_t argmax(std::span<const double> row);

/// Fraction of rows whose argmax equals the label. Throws on empty input or length mismatch.
double accuracy(const num::Tensor& logits, std::span<const std::size_t> labels);

/**
 * Probability that a positive outscores a negative, ties counted one half.
 * Labels are 0/1. Computed from average ranks; equals exhaustive pair counting.
 * Throws std::invalid_argument when only one class is present.
 */
double roc_auc(std::span<const double> scores, std::span<const std::size_t> labels);

/// ROC-AUC on the class-1 softmax probability when C == 2, accuracy otherwise.
double primary_metric(const num::Tensor& logits, std::span<const std::size_t> labels);
std::string_view metric_name(std::size_t num_classes);

}  // namespace galora::metrics
