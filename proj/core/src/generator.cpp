// SPDX-FileCopyrightText: © 2026 The galora authors
//
// SPDX-License-Identifier: Apache-2.0

#include "galora/generator.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "galora/rng.hpp"

namespace galora::tag {

void GeneratorParams::validate() const {
    if (num_classes < 2) throw std::invalid_argument("generator: need at least 2 classes");
    if (num_nodes < 10 * num_classes) {
        throw std::invalid_argument("generator: num_nodes must be at least 10 * num_classes");
    }
    if (!(avg_degree >= 1.0) || avg_degree > static_cast<double>(num_nodes) / 4.0) {
        throw std::invalid_argument("generator: avg_degree must lie in [1, num_nodes / 4]");
    }
    if (topic_vocab_size == 0 || text_len == 0) {
        throw std::invalid_argument("generator: topic_vocab_size and text_len must be positive");
    }
    if (!(text_noise >= 0.0 && text_noise < 1.0)) throw std::invalid_argument("generator: text_noise must lie in [0, 1)");
    if (!(structure_signal > 0.5 && structure_signal <= 1.0)) {
        throw std::invalid_argument("generator: structure_signal must lie in (0.5, 1]");
    }
}

namespace {

using Adjacency = std::vector<std::vector<NodeId>>;

constexpr std::uint64_t kLabelStream = 0x6c6162656cULL;
constexpr std::uint64_t kEdgeStream = 0x65646765ULL;
constexpr std::uint64_t kTextStream = 0x74657874ULL;

std::vector<std::size_t> draw_labels(const GeneratorParams& p) {
    Rng rng = Rng::stream(p.seed, kLabelStream);
    std::vector<std::size_t> labels(p.num_nodes);
    for (std::size_t i = 0; i < p.num_nodes; ++i) labels[i] = i % p.num_classes;
    rng.shuffle(labels);
    return labels;
}

// Every call with the same arguments draws the same edges: the stream is
// re-derived from the seed, so calibration and generation see one graph per q.
std::vector<TextAttributedGraph::Edge> place_edges(const GeneratorParams& p, std::span<const std::size_t> labels,
                                                   double q) {
    const std::size_t n = p.num_nodes, c = p.num_classes;
    std::vector<std::vector<NodeId>> members(c);
    for (NodeId v = 0; v < n; ++v) members[labels[v]].push_back(v);

    Rng rng = Rng::stream(p.seed, kEdgeStream);
    const auto target = static_cast<std::size_t>(std::llround(static_cast<double>(n) * p.avg_degree / 2.0));
    std::unordered_set<std::uint64_t> seen;
    std::vector<TextAttributedGraph::Edge> edges;
    edges.reserve(target);
    std::size_t attempts = 0;
    while (edges.size() < target) {
        if (++attempts > 100 * target + 1000) throw std::runtime_error("generator: could not place edges");
        const NodeId u = rng.below(n);
        const bool intra = rng.bernoulli(q);
        const std::size_t cls = intra ? labels[u] : (labels[u] + 1 + rng.below(c - 1)) % c;
        const auto& pool = members[cls];
        const NodeId v = pool[rng.below(pool.size())];
        if (u == v) continue;
        const auto key = static_cast<std::uint64_t>(std::min(u, v)) * n + std::max(u, v);
        if (!seen.insert(key).second) continue;
        edges.emplace_back(u, v);
    }
    return edges;
}

Adjacency adjacency_of(std::size_t n, std::span<const TextAttributedGraph::Edge> edges) {
    Adjacency adj(n);
    for (const auto& [u, v] : edges) {
        adj[u].push_back(v);
        adj[v].push_back(u);
    }
    return adj;
}

template <typename Neighbours>
double two_hop_plurality(std::size_t n, std::size_t c, std::span<const std::size_t> labels, const Neighbours& nbrs) {
    std::vector<std::size_t> mark(n, n);
    std::vector<std::size_t> counts(c);
    double total = 0.0;
    for (NodeId v = 0; v < n; ++v) {
        std::fill(counts.begin(), counts.end(), 0);
        mark[v] = v;
        for (NodeId u : nbrs(v)) {
            if (mark[u] != v) {
                mark[u] = v;
                ++counts[labels[u]];
            }
            for (NodeId w : nbrs(u)) {
                if (mark[w] != v) {
                    mark[w] = v;
                    ++counts[labels[w]];
                }
            }
        }
        const std::size_t best = *std::max_element(counts.begin(), counts.end());
        if (counts[labels[v]] == best) {
            total += 1.0 / static_cast<double>(std::count(counts.begin(), counts.end(), best));
        }
    }
    return total / static_cast<double>(n);
}

double plurality_at(const GeneratorParams& p, std::span<const std::size_t> labels, double q) {
    const Adjacency adj = adjacency_of(p.num_nodes, place_edges(p, labels, q));
    return two_hop_plurality(p.num_nodes, p.num_classes, labels,
                             [&](NodeId v) -> const std::vector<NodeId>& { return adj[v]; });
}

}  // namespace

double two_hop_plurality_accuracy(const TextAttributedGraph& graph) {
    const auto labels = graph.labels();
    return two_hop_plurality(graph.num_nodes(), graph.num_classes(), labels,
                             [&](NodeId v) { return graph.neighbors(v); });
}

double target_intra_fraction(const GeneratorParams& p) {
    p.validate();
    const auto labels = draw_labels(p);
    double lo = 1.0 / static_cast<double>(p.num_classes), hi = 1.0;
    if (plurality_at(p, labels, lo) >= p.structure_signal) return lo;
    if (plurality_at(p, labels, hi) < p.structure_signal) return hi;
    // Invariant: the graph drawn at `hi` meets the target.
    for (int it = 0; it < 30; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (plurality_at(p, labels, mid) >= p.structure_signal) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return hi;
}

std::string topic_word(std::size_t cls, std::size_t index, std::size_t vocab_size) {
    static constexpr std::string_view consonants = "bdfgklmnprstvz";
    static constexpr std::string_view vowels = "aeiou";
    std::size_t code = cls * vocab_size + index;
    std::string word;
    // Three syllables minimum, more for large vocabularies.
    for (int syl = 0; syl < 3 || code > 0; ++syl) {
        word += consonants[code % consonants.size()];
        code /= consonants.size();
        word += vowels[code % vowels.size()];
        code /= vowels.size();
    }
    return word;
}

SyntheticTag generate_synthetic_tag_detailed(const GeneratorParams& p) {
    p.validate();
    const std::size_t n = p.num_nodes, c = p.num_classes;
    const std::vector<std::size_t> labels = draw_labels(p);

    std::vector<std::string> words(c * p.topic_vocab_size);
    for (std::size_t cls = 0; cls < c; ++cls) {
        for (std::size_t w = 0; w < p.topic_vocab_size; ++w) {
            words[cls * p.topic_vocab_size + w] = topic_word(cls, w, p.topic_vocab_size);
        }
    }

    Rng rng = Rng::stream(p.seed, kTextStream);
    std::vector<std::size_t> text_class(n);
    std::vector<NodeRecord> nodes(n);
    for (NodeId v = 0; v < n; ++v) {
        std::size_t tc = labels[v];
        if (rng.bernoulli(p.text_noise)) tc = (labels[v] + 1 + rng.below(c - 1)) % c;
        text_class[v] = tc;
        std::string text;
        for (std::size_t t = 0; t < p.text_len; ++t) {
            if (t) text += ' ';
            text += words[tc * p.topic_vocab_size + rng.below(p.topic_vocab_size)];
        }
        nodes[v] = NodeRecord{v, std::move(text), labels[v], std::nullopt};
    }

    const double q = target_intra_fraction(p);
    const auto edges = place_edges(p, labels, q);
    return SyntheticTag{TextAttributedGraph(std::move(nodes), edges, c), std::move(text_class), q};
}

TextAttributedGraph generate_synthetic_tag(const GeneratorParams& params) {
    return generate_synthetic_tag_detailed(params).graph;
}

}  // namespace galora::tag
