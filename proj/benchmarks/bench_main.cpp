// SPDX-FileCopyrightText: © 2026 The galora authors
//
// SPDX-License-Identifier: Apache-2.0

#include <numeric>
#include <vector>

#include <benchmark/benchmark.h>

#include "galora/encoder.hpp"
#include "galora/generator.hpp"
#include "galora/kernels.hpp"
#include "galora/ops.hpp"
#include "galora/rng.hpp"
#include "galora/sage.hpp"
#include "galora/trainer.hpp"

namespace {

using namespace galora;

void BM_Gemm(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    Rng rng(0);
    const num::Tensor a = num::normal_tensor(n, n, 1.0, rng), b = num::normal_tensor(n, n, 1.0, rng);
    num::Tensor c(n, n);
    for (auto _ : state) {
        num::kernels::gemm_nn_acc(n, n, n, a.data(), b.data(), c.data());
        benchmark::DoNotOptimize(c.data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * 2 * n * n * n));
}
BENCHMARK(BM_Gemm)->Arg(16)->Arg(64)->Arg(256);

struct EncoderFixture {
    tag::TextAttributedGraph graph = [] {
        tag::GeneratorParams p;
        p.num_nodes = 200;
        return tag::stratified_split(tag::generate_synthetic_tag(p), {});
    }();
    enc::Vocabulary vocab = enc::build_vocab(graph, 4096);
    enc::EncoderBackbone backbone{enc::BackboneConfig{}};
};

void BM_EncodeForward(benchmark::State& state) {
    static const EncoderFixture fx;
    const auto tok = enc::tokenize(fx.graph.node(0).text, {}, fx.vocab, static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        num::Tape tape(false);
        benchmark::DoNotOptimize(enc::encode(tape, fx.backbone, tok).output.value().data());
    }
}
BENCHMARK(BM_EncodeForward)->Arg(16)->Arg(64);

void BM_SagePass(benchmark::State& state) {
    tag::GeneratorParams p;
    p.num_nodes = static_cast<std::size_t>(state.range(0));
    const auto graph = tag::generate_synthetic_tag(p);
    Rng rng(1);
    const num::Tensor x = num::normal_tensor(p.num_nodes, 64, 1.0, rng);
    const num::Tensor w = num::normal_tensor(64, 128, 0.1, rng), b(1, 64);
    for (auto _ : state) benchmark::DoNotOptimize(sage::sage_pass(x, graph, w, b).data());
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * p.num_nodes));
}
BENCHMARK(BM_SagePass)->Arg(2000)->Arg(8000);

// One phase-2 minibatch: cached forward through the adapted layers plus backward.
void BM_Phase2Batch(benchmark::State& state) {
    static const EncoderFixture fx;
    train::RunConfig rc;
    rc.seq_len = 16;
    Rng rng(2);
    sage::SageEmbeddings emb;
    emb.pass1 = num::normal_tensor(fx.graph.num_nodes(), 64, 1.0, rng);
    emb.pass2 = num::normal_tensor(fx.graph.num_nodes(), 64, 1.0, rng);
    const train::Phase2Assembly as(fx.backbone, emb, fx.graph.num_classes(), rc, 0);
    const auto prepared = train::prepare_inputs(fx.backbone, fx.graph, fx.vocab, rc);
    std::vector<tag::NodeId> batch(32);
    std::iota(batch.begin(), batch.end(), tag::NodeId{0});
    std::vector<std::size_t> labels;
    for (auto v : batch) labels.push_back(fx.graph.node(v).label);
    for (auto _ : state) {
        num::Tape tape;
        std::vector<num::Var> rows;
        for (auto v : batch) rows.push_back(train::node_logits(tape, as, prepared, v));
        tape.backward(num::cross_entropy(num::stack_rows(rows), labels));
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * batch.size()));
}
BENCHMARK(BM_Phase2Batch)->Unit(benchmark::kMillisecond);

}  // namespace

// The packaged benchmark_main archive carries LTO bytecode from another compiler release.
BENCHMARK_MAIN();
