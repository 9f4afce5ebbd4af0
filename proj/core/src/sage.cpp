// SPDX-FileCopyrightText: © 2026 The galora authors
//
// SPDX-License-Identifier: Apache-2.0

#include "galora/sage.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "galora/metrics.hpp"
#include "galora/optim.hpp"
#include "galora/rng.hpp"

namespace galora::sage {

using num::Tensor;
using num::Var;

void SageConfig::validate() const {
    if (input_dim == 0 || hidden == 0 || classifier_width == 0) {
        throw std::invalid_argument("sage: input_dim, hidden and classifier_width must be positive");
    }
    if (num_classes < 2) throw std::invalid_argument("sage: need at least 2 classes");
}

std::vector<std::pair<std::string, num::Shape>> sage_parameter_shapes(const SageConfig& c, bool gnn) {
    if (gnn) {
        return {{"sage.W0", {c.hidden, 2 * c.input_dim}},
                {"sage.b0", {1, c.hidden}},
                {"sage.W1", {c.hidden, 2 * c.hidden}},
                {"sage.b1", {1, c.hidden}}};
    }
    return {{"sage.cls.W1", {c.classifier_width, c.hidden}},
            {"sage.cls.b1", {1, c.classifier_width}},
            {"sage.cls.W2", {c.num_classes, c.classifier_width}},
            {"sage.cls.b2", {1, c.num_classes}}};
}

SageModel::SageModel(const SageConfig& config) : config_(config) {
    config_.validate();
    Rng rng = Rng::stream(config_.seed, 0x73616765ULL);
    auto weight = [&](const std::pair<std::string, num::Shape>& s) {
        const std::size_t fan_in = s.second[1];
        return num::make_param(s.first, num::normal_tensor(s.second[0], fan_in, std::sqrt(2.0 / fan_in), rng));
    };
    auto bias = [](const std::pair<std::string, num::Shape>& s) {
        return num::make_param(s.first, Tensor(s.second, 0.0));
    };
    const auto g = sage_parameter_shapes(config_, true);
    const auto c = sage_parameter_shapes(config_, false);
    w0 = weight(g[0]);
    b0 = bias(g[1]);
    w1 = weight(g[2]);
    b1 = bias(g[3]);
    cls_w1 = weight(c[0]);
    cls_b1 = bias(c[1]);
    cls_w2 = weight(c[2]);
    cls_b2 = bias(c[3]);
}

num::ParamList SageModel::parameters() const { return {w0, b0, w1, b1, cls_w1, cls_b1, cls_w2, cls_b2}; }

Var sage_pass(Var x, const num::CsrView& adjacency, Var w, Var b) {
    if (adjacency.num_rows() != x.value().rows()) {
        throw num::ShapeError("sage_pass: adjacency has " + std::to_string(adjacency.num_rows()) + " rows, features " +
                              num::shape_string(x.value().shape()));
    }
    return num::relu(num::linear(num::concat_cols(x, num::neighbor_mean(x, adjacency)), w, b));
}

Tensor sage_pass(const Tensor& x, const tag::TextAttributedGraph& graph, const Tensor& w, const Tensor& b) {
    num::Tape tape(false);
    return sage_pass(tape.constant(x), graph.adjacency(), tape.constant(w), tape.constant(b)).value();
}

SageForward forward(num::Tape& tape, const SageModel& m, Var x, const tag::TextAttributedGraph& graph) {
    const auto adj = graph.adjacency();
    const Var p1 = sage_pass(x, adj, tape.param(m.w0), tape.param(m.b0));
    const Var p2 = sage_pass(p1, adj, tape.param(m.w1), tape.param(m.b1));
    return {p1, p2};
}

SageEmbeddings forward_embeddings(const SageModel& model, const Tensor& x, const tag::TextAttributedGraph& graph) {
    num::Tape tape(false);
    const SageForward f = forward(tape, model, tape.constant(x), graph);
    return {f.pass1.value(), f.pass2.value()};
}

Var classify(num::Tape& tape, const SageModel& m, Var h) {
    const Var z = num::relu(num::linear(h, tape.param(m.cls_w1), tape.param(m.cls_b1)));
    return num::linear(z, tape.param(m.cls_w2), tape.param(m.cls_b2));
}

namespace {

struct SplitIndex {
    std::vector<tag::NodeId> ids;
    std::vector<std::size_t> labels;
};

SplitIndex split_index(const tag::TextAttributedGraph& graph, tag::Split s) {
    SplitIndex out;
    out.ids = graph.nodes_in_split(s);
    for (tag::NodeId v : out.ids) out.labels.push_back(graph.node(v).label);
    return out;
}

Tensor logits_for(const SageModel& model, const Tensor& x, const tag::TextAttributedGraph& graph) {
    num::Tape tape(false);
    return classify(tape, model, forward(tape, model, tape.constant(x), graph).pass2).value();
}

double split_metric(const Tensor& logits, const SplitIndex& s) {
    Tensor rows(s.ids.size(), logits.cols());
    for (std::size_t i = 0; i < s.ids.size(); ++i) {
        std::copy_n(logits.data() + s.ids[i] * logits.cols(), logits.cols(), rows.data() + i * logits.cols());
    }
    return metrics::primary_metric(rows, s.labels);
}

std::vector<Tensor> snapshot(const num::ParamList& params) {
    std::vector<Tensor> out;
    out.reserve(params.size());
    for (const auto& p : params) out.push_back(p->value);
    return out;
}

}  // namespace

Phase1Result train_phase1(SageModel& model, const Tensor& x, const tag::TextAttributedGraph& graph,
                          const Phase1Config& config) {
    if (!graph.has_splits()) throw tag::DataError("train_phase1: graph has no split assignment");
    num::expect_shape(x, graph.num_nodes(), model.config().input_dim, "train_phase1 features");
    if (graph.num_classes() != model.config().num_classes) {
        throw std::invalid_argument("train_phase1: model has " + std::to_string(model.config().num_classes) +
                                    " classes, graph " + std::to_string(graph.num_classes()));
    }
    const SplitIndex train = split_index(graph, tag::Split::train);
    const SplitIndex val = split_index(graph, tag::Split::val);
    const SplitIndex test = split_index(graph, tag::Split::test);
    if (train.ids.empty() || val.ids.empty()) throw tag::DataError("train_phase1: empty train or val split");

    const num::ParamList params = model.parameters();
    num::set_frozen(params, false);
    num::AdamW opt(params, {.lr = config.lr, .weight_decay = config.weight_decay});

    Phase1Result res;
    res.metric_name = metrics::metric_name(graph.num_classes());
    res.best_val_metric = split_metric(logits_for(model, x, graph), val);
    res.val_trace.push_back(res.best_val_metric);
    std::vector<Tensor> best = snapshot(params);

    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        double loss_value = 0.0;
        try {
            num::Tape tape;
            const Var h = forward(tape, model, tape.constant(x), graph).pass2;
            const Var logits = num::gather_rows(classify(tape, model, h), train.ids);
            const Var loss = num::cross_entropy(logits, train.labels);
            loss_value = loss.value()[0];
            opt.zero_grad();
            tape.backward(loss);
        } catch (const num::NonFiniteError& e) {
            throw num::NonFiniteError("phase-1 epoch " + std::to_string(epoch) + ": " + e.what());
        }
        if (!std::isfinite(loss_value)) {
            throw num::NonFiniteError("phase-1 epoch " + std::to_string(epoch) + ": non-finite loss");
        }
        res.loss_trace.push_back(loss_value);
        opt.step();

        const double v = split_metric(logits_for(model, x, graph), val);
        res.val_trace.push_back(v);
        if (v > res.best_val_metric) {
            res.best_val_metric = v;
            res.best_epoch = epoch;
            best = snapshot(params);
        } else if (epoch - res.best_epoch >= config.patience) {
            break;
        }
    }

    for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = best[i];
    num::set_frozen(params, true);
    num::zero_grads(params);
    const Tensor logits = logits_for(model, x, graph);
    res.train_metric = split_metric(logits, train);
    if (!test.ids.empty()) res.test_metric = split_metric(logits, test);
    res.embeddings = forward_embeddings(model, x, graph);
    spdlog::info("phase 1: best {} {:.4f} at epoch {}, test {:.4f}", res.metric_name, res.best_val_metric,
                 res.best_epoch, res.test_metric);
    return res;
}

void save_embeddings(const std::filesystem::path& dir, const SageEmbeddings& emb, std::size_t checkpoint_epoch,
                     double val_metric) {
    num::save_gtsr(dir / "pass1.gtsr", emb.pass1);
    num::save_gtsr(dir / "pass2.gtsr", emb.pass2);
    nlohmann::ordered_json j;
    j["g"] = emb.pass1.cols();
    j["checkpoint_epoch"] = checkpoint_epoch;
    j["val_metric"] = val_metric;
    std::ofstream out(dir / "embeddings.json", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (dir / "embeddings.json").string());
    out << j.dump(2) << '\n';
}

SageEmbeddings load_embeddings(const std::filesystem::path& dir) {
    for (const char* f : {"pass1.gtsr", "pass2.gtsr"}) {
        if (!std::filesystem::exists(dir / f)) {
            throw tag::DataError("missing phase-1 embeddings " + (dir / f).string() + " (run the phase1 command first)");
        }
    }
    SageEmbeddings emb{num::load_gtsr(dir / "pass1.gtsr"), num::load_gtsr(dir / "pass2.gtsr")};
    if (!emb.pass1.same_shape(emb.pass2)) throw tag::DataError("pass1 and pass2 embeddings differ in shape");
    return emb;
}

}  // namespace galora::sage
