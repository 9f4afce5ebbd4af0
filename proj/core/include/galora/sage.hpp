// SPDX-FileCopyrightText: © 2026 The galora authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "galora/autodiff.hpp"
#include "galora/ops.hpp"
#include "galora/tag_store.hpp"

namespace galora::sage {

struct SageConfig {
    std::size_t input_dim = 64;
    std::size_t hidden = 64;
    std::size_t classifier_width = 64;
    std::size_t num_classes = 2;
    std::uint64_t seed = 0;

    void validate() const;
};

/**
 * Two concat-mean layers and a g -> h -> C ReLU classifier.
 * W0 is g x 2k, W1 is g x 2g. Weights ~ normal(0, sqrt(2 / fan_in)), biases zero.
 */
class SageModel {
public:
    explicit SageModel(const SageConfig& config);

    const SageConfig& config() const noexcept { return config_; }

    num::ParamPtr w0, b0, w1, b1;
    num::ParamPtr cls_w1, cls_b1, cls_w2, cls_b2;

    num::ParamList gnn_parameters() const { return {w0, b0, w1, b1}; }
    num::ParamList classifier_parameters() const { return {cls_w1, cls_b1, cls_w2, cls_b2}; }
    num::ParamList parameters() const;

private:
    SageConfig config_;
};

/// Name and shape of every model tensor; `gnn` selects the message-passing layers or the classifier.
std::vector<std::pair<std::string, num::Shape>> sage_parameter_shapes(const SageConfig& config, bool gnn);

struct SageEmbeddings {
    num::Tensor pass1;
    num::Tensor pass2;
};

/// ReLU(concat(X[v], mean_{u in N(v)} X[u]) W^T + b) for every node; isolated nodes aggregate to zero.
num::Var sage_pass(num::Var x, const num::CsrView& adjacency, num::Var w, num::Var b);
num::Tensor sage_pass(const num::Tensor& x, const tag::TextAttributedGraph& graph, const num::Tensor& w,
                      const num::Tensor& b);

struct SageForward {
    num::Var pass1;
    num::Var pass2;
};

SageForward forward(num::Tape& tape, const SageModel& model, num::Var x, const tag::TextAttributedGraph& graph);
SageEmbeddings forward_embeddings(const SageModel& model, const num::Tensor& x, const tag::TextAttributedGraph& graph);
num::Var classify(num::Tape& tape, const SageModel& model, num::Var h);

struct Phase1Config {
    double lr = 1e-2;
    double weight_decay = 5e-4;
    std::size_t max_epochs = 500;
    std::size_t patience = 20;

    friend bool operator==(const Phase1Config&, const Phase1Config&) = default;
};

/**
 * Epoch 0 is the initialized model; traces hold one entry per evaluated epoch.
 * `loss_trace[e]` is the training loss at the start of epoch e + 1.
 */
struct Phase1Result {
    SageEmbeddings embeddings;
    std::size_t best_epoch = 0;
    double best_val_metric = 0.0;
    double test_metric = 0.0;
    double train_metric = 0.0;
    std::string metric_name;
    std::vector<double> loss_trace;
    std::vector<double> val_trace;
};

/**
 * Full-batch AdamW on the training nodes. Keeps the parameters of the epoch
 * with the best validation metric (strict improvement), restores them, and
 * freezes the model. Throws num::NonFiniteError naming the epoch on a
 * non-finite loss.
 */
Phase1Result train_phase1(SageModel& model, const num::Tensor& x, const tag::TextAttributedGraph& graph,
                          const Phase1Config& config);

/// pass1.gtsr, pass2.gtsr and a sidecar {"g", "checkpoint_epoch", "val_metric"} inside `dir`.
void save_embeddings(const std::filesystem::path& dir, const SageEmbeddings& emb, std::size_t checkpoint_epoch,
                     double val_metric);
SageEmbeddings load_embeddings(const std::filesystem::path& dir);

}  // namespace galora::sage
