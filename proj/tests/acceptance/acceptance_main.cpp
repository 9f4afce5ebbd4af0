// SPDX-FileCopyrightText: © 2026 The galora authors
//
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite: one PASS/FAIL line per criterion, exit status 0 only when
// all selected criteria pass. `acceptance 3,7` runs a subset.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "cli/commands.hpp"
#include "galora/audit.hpp"
#include "galora/encoder.hpp"
#include "galora/fusion.hpp"
#include "galora/generator.hpp"
#include "galora/grad_check.hpp"
#include "galora/metrics.hpp"
#include "galora/ops.hpp"
#include "galora/sage.hpp"
#include "galora/trainer.hpp"
#include "test_support.hpp"

namespace {

using namespace galora;
using galora::testing::MicroSetup;

struct Outcome {
    bool pass = false;
    std::string detail;
};

// Reference run of the finished pipeline at generator defaults (seeds 0-4, 80/10/10,
// phase-2 galora capped at 10 epochs): phase-1 val 0.835, galora 0.787, text_only 0.556.
constexpr double kPhase1ValThreshold = 0.75;
constexpr double kLearnabilityMargin = 0.03;
constexpr std::size_t kGaloraEpochCap = 10;

// Criterion 1 -----------------------------------------------------------------

Outcome gradient_fidelity() {
    const MicroSetup s = galora::testing::micro_setup(20, 2, 0);
    num::GradCheckOptions opts;
    opts.samples_per_tensor = std::size_t{1} << 20;  // every scalar
    const enc::EncoderBackbone bb(s.backbone);
    const num::Tensor x = enc::node_features(bb, s.graph, s.vocab, {}, s.seq_len);
    const auto train_ids = s.graph.nodes_in_split(tag::Split::train);
    std::vector<std::size_t> train_labels;
    for (auto v : train_ids) train_labels.push_back(s.graph.node(v).label);

    double worst = 0.0;
    std::size_t params = 0;
    std::string failures;
    auto absorb = [&](const std::string& label, const num::GradCheckReport& r) {
        for (const auto& p : r.params) {
            ++params;
            if (!p.passed || !(p.max_rel_error < 1e-4)) failures += fmt::format(" {}:{}={:.2e}", label, p.name, p.max_rel_error);
        }
        worst = std::max(worst, r.max_rel_error);
    };

    sage::SageModel model({s.backbone.d_model, s.graph_dim, s.graph_dim, 2, 0});
    absorb("phase1", num::grad_check(model.parameters(), [&](num::Tape& t) {
        const auto h = sage::forward(t, model, t.constant(x), s.graph).pass2;
        return num::cross_entropy(num::gather_rows(sage::classify(t, model, h), train_ids), train_labels);
    }, opts));

    const sage::SageEmbeddings emb = galora::testing::random_embeddings(s.graph.num_nodes(), s.graph_dim, 3);
    struct Variant {
        const char* name;
        bool tie;
        fusion::FusionForm form;
    };
    for (const Variant v : {Variant{"residual", false, fusion::FusionForm::residual},
                            Variant{"tied", true, fusion::FusionForm::residual},
                            Variant{"replace", false, fusion::FusionForm::replace}}) {
        train::RunConfig rc;
        rc.rank = s.rank;
        rc.seq_len = s.seq_len;
        rc.tie_fusion_to_lora = v.tie;
        rc.fusion_form = v.form;
        train::Phase2Assembly as(bb, emb, 2, rc, 0);
        galora::testing::randomize(as.trainable(), 0.3, 11);
        const auto prepared = train::prepare_inputs(bb, s.graph, s.vocab, rc);
        absorb(std::string("phase2/") + v.name, num::grad_check(as.trainable(), [&](num::Tape& t) {
            std::vector<num::Var> rows;
            for (auto id : train_ids) rows.push_back(train::node_logits(t, as, prepared, id));
            return num::cross_entropy(num::stack_rows(rows), train_labels);
        }, opts));
    }
    const bool ok = failures.empty() && worst < 1e-4;
    return {ok, fmt::format("max rel error {:.3e} over {} parameter tensors (phase 1 + 3 phase-2 variants){}", worst,
                            params, failures)};
}

// Criterion 2 -----------------------------------------------------------------

Outcome sage_oracle() {
    std::mt19937_64 rng(2);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 1 + rng() % 50, k = 1 + rng() % 12, g = 1 + rng() % 10;
        const double p = static_cast<double>(rng() % 100) / 100.0 * 0.3;
        const auto graph = galora::testing::random_graph(n, 1 + rng() % 3, p, rng());
        const auto nbrs = galora::testing::neighbour_lists(graph);
        const num::Tensor x = galora::testing::random_tensor(n, k, 1.0, rng());
        const num::Tensor w0 = galora::testing::random_tensor(g, 2 * k, 0.5, rng());
        const num::Tensor b0 = galora::testing::random_tensor(1, g, 0.5, rng());
        const num::Tensor w1 = galora::testing::random_tensor(g, 2 * g, 0.5, rng());
        const num::Tensor b1 = galora::testing::random_tensor(1, g, 0.5, rng());
        const num::Tensor p1 = sage::sage_pass(x, graph, w0, b0);
        const num::Tensor p2 = sage::sage_pass(p1, graph, w1, b1);
        const num::Tensor o1 = galora::testing::sage_pass_oracle(x, nbrs, w0, b0);
        const num::Tensor o2 = galora::testing::sage_pass_oracle(o1, nbrs, w1, b1);
        worst = std::max({worst, num::max_abs_diff(p1, o1), num::max_abs_diff(p2, o2)});
    }
    return {worst <= 1e-12, fmt::format("max abs difference {:.3e} over 100 random graphs, both passes", worst)};
}

// Criterion 3 -----------------------------------------------------------------

Outcome zero_adapter_identity() {
    enc::BackboneConfig bc;  // 12 layers, d = 64
    const enc::EncoderBackbone bb(bc);
    const std::size_t g = 64, r = 4, T = 16;
    const auto placement = fusion::Placement::default_for(bc.layers);
    const auto layers = placement.all_layers();
    const std::vector<std::string> targets{std::string(enc::kQkvProjection), std::string(enc::kOutProjection)};
    auto lora = fusion::LoraSet::build(layers, enc::lora_target_shapes(bc, targets), r, 1);
    auto fus = fusion::FusionAdapterSet::build(bc.layers, placement, r, bc.d_model, g, 1);
    // Everything except W_C and LoRA B is made non-zero so only those two carry the identity.
    std::size_t k = 0;
    for (const auto& ad : fus.adapters()) galora::testing::randomize(num::ParamList{ad.w_a, ad.w_b, ad.gate_logit}, 0.5, 100 + k++);
    for (const auto& pr : lora.pairs()) galora::testing::randomize(num::ParamList{pr.a}, 0.5, 200 + k++);

    std::mt19937_64 rng(3);
    std::size_t identical = 0;
    for (int trial = 0; trial < 100; ++trial) {
        enc::TokenizedText tok;
        const std::size_t visible = 1 + rng() % T;
        for (std::size_t i = 0; i < T; ++i) {
            tok.ids.push_back(i < visible ? static_cast<enc::TokenId>(rng() % bc.vocab_size) : enc::Vocabulary::kPad);
            tok.mask.push_back(i < visible ? 1 : 0);
        }
        num::Tape bare(false), adapted(false);
        const enc::Encoded ref = enc::encode(bare, bb, tok);
        enc::Injection inj;
        inj.fusion = &fus;
        inj.lora = &lora;
        inj.pass1 = adapted.constant(galora::testing::random_tensor(1, g, 1.0, rng()));
        inj.pass2 = adapted.constant(galora::testing::random_tensor(1, g, 1.0, rng()));
        const enc::Encoded out = enc::encode(adapted, bb, tok, &inj);
        bool same = out.output.value() == ref.output.value();
        for (std::size_t l = 0; l < bc.layers; ++l) same = same && out.layers[l].value() == ref.layers[l].value();
        identical += same ? 1 : 0;
    }
    return {identical == 100, fmt::format("{}/100 random inputs bitwise identical at every layer", identical)};
}

// Criterion 4 -----------------------------------------------------------------

Outcome frozen_invariance() {
    const MicroSetup s = galora::testing::micro_setup(60, 3, 4);
    const enc::EncoderBackbone bb(s.backbone);
    const num::Tensor x = enc::node_features(bb, s.graph, s.vocab, {}, s.seq_len);
    sage::SageModel model({s.backbone.d_model, s.graph_dim, s.graph_dim, 3, 0});
    sage::Phase1Config p1;
    p1.max_epochs = 20;
    const sage::SageEmbeddings emb = sage::train_phase1(model, x, s.graph, p1).embeddings;

    std::vector<num::Tensor> before;
    for (const auto& p : bb.parameters()) before.push_back(p->value);
    const sage::SageEmbeddings emb_before = emb;

    train::RunConfig rc;
    rc.rank = s.rank;
    rc.seq_len = s.seq_len;
    rc.epochs = 10;
    rc.patience = 1000;
    rc.seeds = {0};
    rc.lr = 1e-2;
    std::size_t epochs = 0, changed = 0, trainable = 0;
    const train::Phase2Inputs in{&bb, &s.graph, &s.vocab, &emb, std::nullopt};
    train::seed_sweep(in, rc, [&](const train::Phase2Assembly& as, const train::SeedResult& r) {
        epochs = r.epochs_run;
        const train::Phase2Assembly fresh(bb, emb, 3, rc, r.seed);
        const auto now = as.trainable();
        const auto init = fresh.trainable();
        trainable = now.size();
        for (std::size_t i = 0; i < now.size(); ++i) changed += now[i]->value == init[i]->value ? 0 : 1;
    });

    std::size_t unchanged = 0;
    const auto after = bb.parameters();
    for (std::size_t i = 0; i < after.size(); ++i) unchanged += after[i]->value == before[i] ? 1 : 0;
    const bool emb_same = emb.pass1 == emb_before.pass1 && emb.pass2 == emb_before.pass2;
    const bool ok = epochs >= 10 && unchanged == after.size() && emb_same && changed == trainable;
    return {ok, fmt::format("{} epochs; {}/{} backbone tensors and {} embedding tensors unchanged; {}/{} trainable "
                            "tensors moved",
                            epochs, unchanged, after.size(), emb_same ? 2 : 0, changed, trainable)};
}

// Criteria 5 and 6 ------------------------------------------------------------

fusion::ParamAudit gpt2_audit() {
    enc::BackboneConfig bc;
    bc.layers = 12;
    bc.d_model = 768;
    bc.heads = 12;
    bc.mlp_width = 3072;
    bc.max_len = 1024;
    bc.vocab_size = 50257;
    sage::SageConfig sc{768, 64, 64, 2, 0};
    train::RunConfig rc;
    rc.rank = 4;
    rc.tie_fusion_to_lora = true;
    return fusion::audit_parameters(train::describe_assembly(bc, sc, rc, 2));
}

Outcome audit_total() {
    const auto a = gpt2_audit();
    const double rel = std::abs(static_cast<double>(a.phase2_trainable) - 115200.0) / 115200.0;
    const bool ok = rel <= 0.05 && a.lora_pairs == 110592;
    std::string table = a.to_table();
    while (!table.empty() && table.back() == '\n') table.pop_back();
    for (std::size_t pos = 0; (pos = table.find('\n', pos)) != std::string::npos; pos += 2) {
        table.replace(pos, 1, "\n       ");
    }
    return {ok, fmt::format("trainable {} ({:.2f}% from 115.2K), LoRA pairs {} (expected 110592)\n       {}",
                            a.phase2_trainable, 100.0 * rel, a.lora_pairs, table)};
}

Outcome audit_fraction() {
    const auto a = gpt2_audit();
    const double pct = 100.0 * a.relative_fraction;
    const bool ok = pct < 0.3 && std::abs(pct - 0.238) <= 0.1;
    return {ok, fmt::format("{} / {} = {:.4f}% (bound < 0.3%, 0.238 +/- 0.1 points)", a.total_trainable,
                            a.backbone_total, pct)};
}

// Criterion 7 -----------------------------------------------------------------

Outcome learnability() {
    cli::RunContext ctx;
    ctx.config.output_dir = galora::testing::scratch_dir("acceptance_learnability");
    ctx.force = true;
    cli::cmd_gen_data(ctx);
    const sage::Phase1Result p1 = cli::cmd_phase1(ctx);

    ctx.config.trainer.mode = train::BaselineMode::text_only;
    const train::RunReport text_only = cli::cmd_phase2(ctx);
    ctx.config.trainer.mode = train::BaselineMode::galora;
    ctx.config.trainer.epochs = kGaloraEpochCap;
    const train::RunReport galora_run = cli::cmd_phase2(ctx);
    std::filesystem::remove_all(ctx.config.output_dir);

    const double margin = galora_run.mean - text_only.mean;
    const bool ok = p1.best_val_metric >= kPhase1ValThreshold && margin >= kLearnabilityMargin;
    return {ok, fmt::format("phase-1 val {:.4f} (>= {:.2f}); galora {:.4f} vs text_only {:.4f}, margin {:+.4f} "
                            "(>= {:.2f}); phase 2 took {:.0f} s (galora) and {:.0f} s (text_only)",
                            p1.best_val_metric, kPhase1ValThreshold, galora_run.mean, text_only.mean, margin,
                            kLearnabilityMargin, galora_run.wall_clock_seconds, text_only.wall_clock_seconds)};
}

// Criterion 8 -----------------------------------------------------------------

Outcome metric_oracles() {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::size_t auc_exact = 0, acc_exact = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 200;
        std::vector<double> scores(n);
        std::vector<std::size_t> labels(n);
        const bool coarse = trial % 2 == 1;  // many tied scores
        for (std::size_t i = 0; i < n; ++i) {
            scores[i] = coarse ? static_cast<double>(rng() % 6) / 10.0 : normal(rng);
            labels[i] = rng() % 2;
        }
        labels[0] = 0;
        labels[1] = 1;
        auc_exact += metrics::roc_auc(scores, labels) == galora::testing::auc_pair_count(scores, labels) ? 1 : 0;

        num::Tensor logits(n, 4);
        for (auto& v : logits.values()) v = coarse ? static_cast<double>(rng() % 3) : normal(rng);
        std::vector<std::size_t> cls(n);
        for (auto& c : cls) c = rng() % 4;
        acc_exact += metrics::accuracy(logits, cls) == galora::testing::accuracy_oracle(logits, cls) ? 1 : 0;
    }
    return {auc_exact == 100 && acc_exact == 100,
            fmt::format("ROC-AUC exact on {}/100 vectors, accuracy exact on {}/100 (n = 200)", auc_exact, acc_exact)};
}

// Criterion 9 -----------------------------------------------------------------

Outcome stratification() {
    struct Case {
        std::size_t n, c;
        std::uint64_t seed;
    };
    const std::vector<Case> cases{{2000, 4, 0}, {2000, 4, 1}, {500, 5, 2}, {103, 3, 3}, {60, 2, 4}, {337, 7, 5}};
    const std::vector<tag::SplitSpec> specs{{0.8, 0.1, 0.1, 0}, {0.54, 0.18, 0.28, 1}, {0.6, 0.2, 0.2, 2},
                                            {0.7, 0.15, 0.15, 3}, {0.5, 0.25, 0.25, 4}};
    std::size_t checks = 0, violations = 0;
    for (const auto& cs : cases) {
        tag::GeneratorParams gp;
        gp.num_nodes = cs.n;
        gp.num_classes = cs.c;
        gp.avg_degree = std::min(8.0, static_cast<double>(cs.n) / 4.0);
        gp.seed = cs.seed;
        const auto base = tag::generate_synthetic_tag(gp);
        for (const auto& spec : specs) {
            const auto g = tag::stratified_split(base, spec);
            std::vector<std::array<std::size_t, 3>> counts(cs.c, {0, 0, 0});
            std::vector<std::size_t> sizes(cs.c, 0);
            for (const auto& node : g.nodes()) {
                if (!node.split) ++violations;
                ++counts[node.label][static_cast<std::size_t>(node.split.value_or(tag::Split::train))];
                ++sizes[node.label];
            }
            const double fr[3] = {spec.train_frac, spec.val_frac, spec.test_frac};
            for (std::size_t c = 0; c < cs.c; ++c) {
                for (std::size_t s = 0; s < 3; ++s) {
                    ++checks;
                    if (std::abs(static_cast<double>(counts[c][s]) - fr[s] * static_cast<double>(sizes[c])) > 1.0) {
                        ++violations;
                    }
                }
            }
        }
    }
    return {violations == 0,
            fmt::format("{} (class, partition) counts over {} generated splits, {} outside +/-1 node", checks,
                        cases.size() * specs.size(), violations)};
}

// Criterion 10 ----------------------------------------------------------------

Outcome determinism() {
    cli::RunContext ctx;
    auto& c = ctx.config;
    c.output_dir = galora::testing::scratch_dir("acceptance_determinism");
    ctx.force = true;
    c.dataset.generator.num_nodes = 120;
    c.dataset.generator.num_classes = 3;
    c.dataset.generator.avg_degree = 4;
    c.backbone.layers = 4;
    c.backbone.d_model = 16;
    c.backbone.heads = 2;
    c.backbone.mlp_width = 32;
    c.backbone.vocab_size = 256;
    c.trainer.seq_len = 8;
    c.trainer.rank = 2;
    c.trainer.epochs = 3;
    c.trainer.seeds = {0, 1};
    c.sage.hidden = 8;
    c.sage.classifier_width = 8;
    c.sage.schedule.max_epochs = 40;
    c.validate();

    cli::cmd_gen_data(ctx);
    cli::cmd_phase1(ctx);
    cli::cmd_phase2(ctx);
    const auto first = galora::testing::read_tree(c.output_dir);
    cli::cmd_phase1(ctx);
    cli::cmd_phase2(ctx);
    const auto second = galora::testing::read_tree(c.output_dir);
    std::filesystem::remove_all(c.output_dir);

    std::size_t checkpoints = 0, differing = 0;
    for (const auto& [path, bytes] : first) {
        checkpoints += path.ends_with(".gtsr") ? 1 : 0;
        const auto it = second.find(path);
        if (it == second.end() || it->second != bytes) ++differing;
    }
    const bool has_report = first.count("phase2/galora/report.json") == 1;
    const bool ok = differing == 0 && first.size() == second.size() && has_report && checkpoints > 0;
    return {ok, fmt::format("{} files ({} tensors) compared after two phase1 + phase2 executions, {} differ",
                            first.size(), checkpoints, differing)};
}

}  // namespace

int main(int argc, char** argv) {
    spdlog::set_level(spdlog::level::warn);
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"gradient fidelity", gradient_fidelity},
        {"GraphSAGE oracle equivalence", sage_oracle},
        {"zero-adapter identity", zero_adapter_identity},
        {"frozen invariance", frozen_invariance},
        {"parameter audit total", audit_total},
        {"relative-fraction audit", audit_fraction},
        {"synthetic learnability", learnability},
        {"metric oracles", metric_oracles},
        {"stratification", stratification},
        {"determinism", determinism},
    };
    std::set<std::size_t> only;
    if (argc > 1) {
        std::stringstream list(argv[1]);
        for (std::string item; std::getline(list, item, ',');) only.insert(std::stoul(item));
    }

    std::size_t run = 0, passed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        if (!only.empty() && !only.count(i + 1)) continue;
        ++run;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        passed += o.pass ? 1 : 0;
        std::printf("[%s] criterion %zu (%s): %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                    o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    std::printf("acceptance: %zu/%zu criteria passed\n", passed, run);
    return passed == run ? 0 : 1;
}
