// SPDX-FileCopyrightText: © 2026 The galora authors
//
// SPDX-License-Identifier: Apache-2.0

#include "galora/metrics.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "galora/ops.hpp"

namespace galora::metrics {

std::size_t argmax(std::span<const double> row) {
    if (row.empty()) throw std::invalid_argument("argmax: empty row");
    std::size_t best = 0;
    for (std::size_t i = 1; i < row.size(); ++i) {
        if (row[i] > row[best]) best = i;
    }
    return best;
}

double accuracy(const num::Tensor& logits, std::span<const std::size_t> labels) {
    if (labels.empty() || logits.rows() != labels.size()) {
        throw std::invalid_argument("accuracy: " + std::to_string(logits.rows()) + " rows vs " +
                                    std::to_string(labels.size()) + " labels");
    }
    std::size_t correct = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) correct += argmax(logits.row_span(i)) == labels[i];
    return static_cast<double>(correct) / static_cast<double>(labels.size());
}

double roc_auc(std::span<const double> scores, std::span<const std::size_t> labels) {
    const std::size_t n = scores.size();
    if (n != labels.size()) throw std::invalid_argument("roc_auc: scores and labels differ in length");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Twice the Mann-Whitney U of the positives, kept integral: a tie group
    // spanning 0-based positions [i, j) has doubled average rank i + j + 1.
    std::uint64_t pos = 0, twice_rank_sum = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        std::uint64_t group_pos = 0;
        for (std::size_t k = i; k < j; ++k) {
            if (labels[order[k]] > 1) throw std::invalid_argument("roc_auc: labels must be 0 or 1");
            group_pos += labels[order[k]];
        }
        twice_rank_sum += group_pos * (i + j + 1);
        pos += group_pos;
        i = j;
    }
    const std::uint64_t neg = n - pos;
    if (pos == 0 || neg == 0) throw std::invalid_argument("roc_auc: needs both positive and negative examples");
    const std::uint64_t twice_u = twice_rank_sum - pos * (pos + 1);
    return static_cast<double>(twice_u) / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
}

double primary_metric(const num::Tensor& logits, std::span<const std::size_t> labels) {
    if (logits.cols() != 2) return accuracy(logits, labels);
    const num::Tensor p = num::softmax_rows(logits);
    std::vector<double> scores(p.rows());
    for (std::size_t i = 0; i < p.rows(); ++i) scores[i] = p(i, 1);
    return roc_auc(scores, labels);
}

std::string_view metric_name(std::size_t num_classes) { return num_classes == 2 ? "roc_auc" : "accuracy"; }

}  // namespace galora::metrics
