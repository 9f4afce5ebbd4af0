// SPDX-FileCopyrightText: © 2026 The galora authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "galora/ops.hpp"

namespace galora::tag {

using NodeId = std::size_t;

enum class Split : std::uint8_t { train, val, test };

std::string_view to_string(Split s);
Split parse_split(std::string_view s);

/// Malformed or inconsistent dataset input. `line()` is 1-based, 0 when not tied to a line.
class DataError : public std::runtime_error {
public:
    DataError(const std::string& what, std::size_t line = 0);
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

struct NodeRecord {
    NodeId id = 0;
    std::string text;
    std::size_t label = 0;
    std::optional<Split> split;
};

/**
 * Immutable text-attributed graph.
 *
 * Node ids are dense [0, N). Adjacency is stored in both directions as sorted
 * neighbour lists without self loops or duplicates.
 */
class TextAttributedGraph {
public:
    using Edge = std::pair<NodeId, NodeId>;

    TextAttributedGraph() = default;
    /// Validates the records, then symmetrises and deduplicates `edges`.
    TextAttributedGraph(std::vector<NodeRecord> nodes, std::span<const Edge> edges, std::size_t num_classes);

    std::size_t num_nodes() const noexcept { return nodes_.size(); }
    std::size_t num_classes() const noexcept { return num_classes_; }
    /// Undirected edge count.
    std::size_t num_edges() const noexcept { return indices_.size() / 2; }

    const NodeRecord& node(NodeId v) const;
    std::span<const NodeRecord> nodes() const noexcept { return nodes_; }

    /// Sorted neighbours of v; throws std::out_of_range for an invalid id.
    std::span<const NodeId> neighbors(NodeId v) const;
    std::size_t degree(NodeId v) const { return neighbors(v).size(); }

    /// Each undirected edge once, as (u, v) with u < v, in lexicographic order.
    std::vector<Edge> edges() const;

    num::CsrView adjacency() const noexcept { return {offsets_, indices_}; }

    bool has_splits() const noexcept;
    std::vector<NodeId> nodes_in_split(Split s) const;
    std::vector<std::size_t> labels() const;

    /// Copy with split assignments replaced.
    TextAttributedGraph with_splits(std::span<const Split> splits) const;

private:
    std::vector<NodeRecord> nodes_;
    std::size_t num_classes_ = 0;
    std::vector<std::size_t> offsets_;
    std::vector<NodeId> indices_;
};

/// Free-function form of TextAttributedGraph::neighbors.
std::span<const NodeId> neighbors(const TextAttributedGraph& graph, NodeId v);

/**
 * Reads nodes (JSON Lines {"id","text","label"}) and edges (TSV "u<TAB>v").
 * When `num_classes` is absent it is one past the largest label.
 * Errors carry the 1-based line number of the offending record.
 */
TextAttributedGraph load_graph(const std::filesystem::path& nodes_path, const std::filesystem::path& edges_path,
                               std::optional<std::size_t> num_classes = std::nullopt);

void save_nodes(const TextAttributedGraph& graph, const std::filesystem::path& path);
void save_edges(const TextAttributedGraph& graph, const std::filesystem::path& path);
/// JSON Lines {"id", "split"}.
void save_splits(const TextAttributedGraph& graph, const std::filesystem::path& path);
TextAttributedGraph load_splits(const TextAttributedGraph& graph, const std::filesystem::path& path);

struct SplitSpec {
    double train_frac = 0.8;
    double val_frac = 0.1;
    double test_frac = 0.1;
    std::uint64_t seed = 0;

    void validate() const;
    friend bool operator==(const SplitSpec&, const SplitSpec&) = default;
};

/// Per-class partition sizes: val and test are rounded to nearest, the remainder goes to train.
struct SplitSizes {
    std::size_t train = 0, val = 0, test = 0;
};
SplitSizes split_sizes(std::size_t class_size, const SplitSpec& spec);

/// Per-class shuffled assignment. Every class needs at least 3 nodes.
TextAttributedGraph stratified_split(const TextAttributedGraph& graph, const SplitSpec& spec);

}  // namespace galora::tag
