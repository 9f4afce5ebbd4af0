// SPDX-FileCopyrightText: © 2026 The galora authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "galora/tag_store.hpp"

namespace galora::tag {

/**
 * Planted-partition text-attributed graph.
 *
 * Every node has a latent class (its label). With probability `text_noise` the
 * node's text is drawn from another class's topic vocabulary, so a text-only
 * classifier cannot exceed 1 - text_noise. Edges join same-class endpoints with
 * probability target_intra_fraction(), chosen so that in the generated graph the
 * plurality label within two hops equals a node's own label for at least a
 * `structure_signal` fraction of nodes.
 */
struct GeneratorParams {
    std::size_t num_nodes = 2000;
    std::size_t num_classes = 4;
    double avg_degree = 8.0;
    std::size_t topic_vocab_size = 40;
    std::size_t text_len = 12;
    double text_noise = 0.35;
    double structure_signal = 0.9;
    std::uint64_t seed = 0;

    /// Throws std::invalid_argument for degenerate settings.
    void validate() const;
    friend bool operator==(const GeneratorParams&, const GeneratorParams&) = default;
};

/// Fraction of nodes whose own label is the plurality over the distinct nodes
/// within two hops (excluding the node). A t-way tie counts 1/t; an empty
/// two-hop set ties all C classes.
double two_hop_plurality_accuracy(const TextAttributedGraph& graph);

/// Smallest same-class edge probability (to bisection precision) whose graph reaches
/// `structure_signal` two-hop plurality accuracy; 1 when unattainable.
double target_intra_fraction(const GeneratorParams& params);

/// Deterministic pseudo-word for (class, index); distinct for distinct inputs.
std::string topic_word(std::size_t cls, std::size_t index, std::size_t vocab_size);

/// Text class per node: the label, or a different class for corrupted nodes.
struct SyntheticTag {
    TextAttributedGraph graph;
    std::vector<std::size_t> text_class;
    double intra_fraction_target = 0.0;
};

SyntheticTag generate_synthetic_tag_detailed(const GeneratorParams& params);
TextAttributedGraph generate_synthetic_tag(const GeneratorParams& params);

}  // namespace galora::tag
