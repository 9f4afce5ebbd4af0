// SPDX-FileCopyrightText: © 2026 The galora authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Fixtures and brute-force oracles shared by the unit and acceptance tests.
// The oracles use plain loops only and never call library ops.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "galora/autodiff.hpp"
#include "galora/encoder.hpp"
#include "galora/sage.hpp"
#include "galora/tag_store.hpp"
#include "galora/tensor.hpp"
#include "galora/trainer.hpp"

namespace galora::testing {

using Neighbours = std::vector<std::vector<std::size_t>>;

/// Erdos-Renyi graph with words "c<label>" and "n<k>" as text; labels cycle 0..C-1.
tag::TextAttributedGraph random_graph(std::size_t n, std::size_t num_classes, double edge_prob, std::uint64_t seed);

/// Neighbour lists rebuilt from the edge list, independently of the CSR view.
Neighbours neighbour_lists(const tag::TextAttributedGraph& graph);

num::Tensor random_tensor(std::size_t rows, std::size_t cols, double scale, std::uint64_t seed);

/// Overwrites every parameter with normal(0, scale) draws.
void randomize(const num::ParamList& params, double scale, std::uint64_t seed);

/// relu([x_v, mean_{u in N(v)} x_u] W^T + b) by explicit loops; the empty mean is zero.
num::Tensor sage_pass_oracle(const num::Tensor& x, const Neighbours& nbrs, const num::Tensor& w, const num::Tensor& b);

/// AUC by comparing every (positive, negative) pair; ties count one half.
double auc_pair_count(std::span<const double> scores, std::span<const std::size_t> labels);

/// Fraction of rows whose first maximal entry sits at the label.
double accuracy_oracle(const num::Tensor& logits, std::span<const std::size_t> labels);

/// Micro pipeline shapes: L=4, d=16, T=8, g=8, r=2, N=20.
struct MicroSetup {
    enc::BackboneConfig backbone;
    std::size_t seq_len = 8;
    std::size_t graph_dim = 8;
    std::size_t rank = 2;
    tag::TextAttributedGraph graph;
    enc::Vocabulary vocab;
};
MicroSetup micro_setup(std::size_t num_nodes = 20, std::size_t num_classes = 2, std::uint64_t seed = 0);

/// Random 1 x g structural rows for every node of `graph`.
sage::SageEmbeddings random_embeddings(std::size_t n, std::size_t g, std::uint64_t seed);

/// Every regular file below `dir` except timing.json, keyed by relative path.
std::map<std::string, std::string> read_tree(const std::filesystem::path& dir);

/// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& name);

}  // namespace galora::testing
