// SPDX-FileCopyrightText: © 2026 The galora authors
//
// SPDX-License-Identifier: Apache-2.0

#include "cli/commands.hpp"

#include <chrono>
#include <fstream>
#include <iostream>
#include <set>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "cli/manifest.hpp"
#include "galora/encoder.hpp"
#include "galora/generator.hpp"
#include "galora/metrics.hpp"
#include "galora/vocabulary.hpp"

namespace galora::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kData = "data";
constexpr const char* kPhase1 = "phase1";
constexpr const char* kPhase2 = "phase2";

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("short write to " + path.string());
}

void write_json(const fs::path& path, const nlohmann::ordered_json& j) { write_text(path, j.dump(2) + "\n"); }

void write_timing(const fs::path& dir, double seconds) {
    nlohmann::ordered_json j;
    j["wall_clock_seconds"] = seconds;
    write_json(dir / kTimingFile, j);
}

/// Creates `dir` empty; an existing non-empty directory needs --force.
void fresh_dir(const RunContext& ctx, const fs::path& dir) {
    if (fs::exists(dir) && !fs::is_empty(dir)) {
        if (!ctx.force) throw UsageError(dir.string() + " already exists; pass --force to overwrite");
        fs::remove_all(dir);
    }
    fs::create_directories(dir);
    write_text(dir / "config.ini", serialize_config(ctx.config));
}

std::vector<fs::path> dataset_inputs(const RunContext& ctx) {
    const auto& ds = ctx.config.dataset;
    if (ds.nodes.empty()) {
        const fs::path d = ctx.run_dir() / kData;
        return {d / "nodes.jsonl", d / "edges.tsv", d / "splits.jsonl"};
    }
    std::vector<fs::path> in{ds.nodes, ds.edges};
    if (!ds.splits.empty()) in.push_back(ds.splits);
    return in;
}

void finish(const RunContext& ctx) {
    std::vector<fs::path> inputs;
    for (const auto& p : dataset_inputs(ctx)) {
        if (fs::exists(p)) inputs.push_back(p);
    }
    write_manifest(ctx.run_dir(), inputs);
}

tag::TextAttributedGraph load_dataset(const RunContext& ctx) {
    const auto& ds = ctx.config.dataset;
    const auto in = dataset_inputs(ctx);
    for (const auto& p : in) {
        if (!fs::exists(p)) {
            throw tag::DataError("missing dataset file " + p.string() +
                                 (ds.nodes.empty() ? " (run the gen-data command first)" : ""));
        }
    }
    const std::optional<std::size_t> classes =
        ds.nodes.empty() ? std::optional<std::size_t>(ds.generator.num_classes) : std::nullopt;
    tag::TextAttributedGraph g = tag::load_graph(in[0], in[1], classes);
    if (in.size() == 3) return tag::load_splits(g, in[2]);
    return tag::stratified_split(g, ds.split);
}

std::size_t num_classes_of(const RunContext& ctx) {
    return ctx.config.dataset.nodes.empty() ? ctx.config.dataset.generator.num_classes
                                            : load_dataset(ctx).num_classes();
}

/// Every prompt the run may use, so its words get vocabulary entries.
std::vector<std::string> prompt_texts(const ExperimentConfig& cfg) {
    std::vector<std::string> out{cfg.trainer.prompt};
    out.insert(out.end(), cfg.ablation.prompts.begin(), cfg.ablation.prompts.end());
    return out;
}

struct Phase1Artifacts {
    tag::TextAttributedGraph graph;
    enc::Vocabulary vocab;
    sage::SageEmbeddings embeddings;
};

Phase1Artifacts load_phase1(const RunContext& ctx) {
    const fs::path dir = ctx.run_dir() / kPhase1;
    if (!fs::exists(dir / "vocab.txt")) {
        throw tag::DataError("missing " + (dir / "vocab.txt").string() + " (run the phase1 command first)");
    }
    Phase1Artifacts a{load_dataset(ctx), enc::Vocabulary::load(dir / "vocab.txt"), sage::load_embeddings(dir)};
    if (a.embeddings.pass1.rows() != a.graph.num_nodes()) {
        throw tag::DataError(fmt::format("phase-1 embeddings have {} rows but the dataset has {} nodes; rerun phase1",
                                         a.embeddings.pass1.rows(), a.graph.num_nodes()));
    }
    return a;
}

train::Phase2Inputs phase2_inputs(const ExperimentConfig& cfg, const enc::EncoderBackbone& bb,
                                  const Phase1Artifacts& a) {
    return {&bb, &a.graph, &a.vocab, &a.embeddings,
            cfg.sage_config(cfg.backbone.d_model, a.graph.num_classes())};
}

fs::path phase2_dir(const RunContext& ctx, train::BaselineMode mode) {
    return ctx.run_dir() / kPhase2 / std::string(train::to_string(mode));
}

}  // namespace

void cmd_gen_data(const RunContext& ctx) {
    const fs::path dir = ctx.run_dir() / kData;
    fresh_dir(ctx, dir);
    const auto& ds = ctx.config.dataset;
    const tag::TextAttributedGraph g = tag::stratified_split(tag::generate_synthetic_tag(ds.generator), ds.split);
    tag::save_nodes(g, dir / "nodes.jsonl");
    tag::save_edges(g, dir / "edges.tsv");
    tag::save_splits(g, dir / "splits.jsonl");
    spdlog::info("gen-data: {} nodes, {} edges, {} classes -> {}", g.num_nodes(), g.num_edges(), g.num_classes(),
                 dir.string());
    finish(ctx);
}

sage::Phase1Result cmd_phase1(const RunContext& ctx) {
    const auto start = Clock::now();
    const ExperimentConfig& cfg = ctx.config;
    const tag::TextAttributedGraph graph = load_dataset(ctx);
    const fs::path dir = ctx.run_dir() / kPhase1;
    fresh_dir(ctx, dir);

    const auto prompts = prompt_texts(cfg);
    std::set<std::string> prompt_words;
    for (const auto& p : prompts) {
        for (auto& w : enc::split_words(p)) prompt_words.insert(std::move(w));
    }
    const std::size_t budget = cfg.backbone.vocab_size - enc::Vocabulary::kReserved;
    if (prompt_words.size() >= budget) throw ConfigError("prompt words exceed backbone.vocab_size");
    const enc::Vocabulary vocab = enc::build_vocab(graph, budget - prompt_words.size(), prompts);
    vocab.save(dir / "vocab.txt");

    const enc::EncoderBackbone backbone(cfg.backbone);
    const enc::PromptSpec prompt{cfg.trainer.prompt};
    const num::Tensor x = enc::node_features(backbone, graph, vocab, prompt, cfg.trainer.seq_len, cfg.trainer.pooling);
    enc::save_features(dir / "features.gtsr", dir / "features.json", x, cfg.trainer.pooling, prompt);

    sage::SageModel model(cfg.sage_config(x.cols(), graph.num_classes()));
    sage::Phase1Result res = sage::train_phase1(model, x, graph, cfg.sage.schedule);
    sage::save_embeddings(dir, res.embeddings, res.best_epoch, res.best_val_metric);
    fs::create_directories(dir / "sage");
    for (const auto& p : model.parameters()) num::save_gtsr(dir / "sage" / (p->name + ".gtsr"), p->value);

    nlohmann::ordered_json m;
    m["metric_name"] = res.metric_name;
    m["best_epoch"] = res.best_epoch;
    m["best_val_metric"] = res.best_val_metric;
    m["train_metric"] = res.train_metric;
    m["test_metric"] = res.test_metric;
    m["loss_trace"] = res.loss_trace;
    m["val_trace"] = res.val_trace;
    write_json(dir / "metrics.json", m);
    write_timing(dir, seconds_since(start));
    finish(ctx);
    return res;
}

train::RunReport cmd_phase2(const RunContext& ctx) {
    const auto start = Clock::now();
    const ExperimentConfig& cfg = ctx.config;
    const Phase1Artifacts a = load_phase1(ctx);
    const fs::path dir = phase2_dir(ctx, cfg.trainer.mode);
    fresh_dir(ctx, dir);

    const enc::EncoderBackbone backbone(cfg.backbone);
    const train::Phase2Inputs inputs = phase2_inputs(cfg, backbone, a);
    train::RunReport report =
        train::seed_sweep(inputs, cfg.trainer, [&](const train::Phase2Assembly& as, const train::SeedResult& r) {
            train::save_adapters(dir / fmt::format("seed_{}", r.seed), as);
        });
    report.wall_clock_seconds = seconds_since(start);
    write_json(dir / "report.json", report.to_json());
    write_timing(dir, report.wall_clock_seconds);
    spdlog::info("phase 2 [{}]: {} {:.4f} over {} seed(s)", train::to_string(report.mode), report.metric_name,
                 report.mean, report.seeds.size());
    finish(ctx);
    return report;
}

fusion::ParamAudit cmd_audit(const RunContext& ctx, std::ostream& out) {
    const ExperimentConfig& cfg = ctx.config;
    const std::size_t classes = num_classes_of(ctx);
    const fusion::ParamAudit audit = fusion::audit_parameters(
        train::describe_assembly(cfg.backbone, cfg.sage_config(cfg.backbone.d_model, classes), cfg.trainer, classes));
    const fs::path dir = ctx.run_dir() / "audit";
    fs::create_directories(dir);
    write_text(dir / "config.ini", serialize_config(cfg));
    write_json(dir / "audit.json", audit.to_json());
    write_text(dir / "audit.txt", audit.to_table());
    out << audit.to_table();
    finish(ctx);
    return audit;
}

train::AblationTable cmd_ablate(const RunContext& ctx, std::string_view what) {
    if (what != "rank" && what != "prompt") {
        throw UsageError(fmt::format("unknown ablation '{}' (valid choices: rank, prompt)", what));
    }
    const auto start = Clock::now();
    const ExperimentConfig& cfg = ctx.config;
    const Phase1Artifacts a = load_phase1(ctx);
    const fs::path dir = ctx.run_dir() / "ablate" / std::string(what);
    fresh_dir(ctx, dir);

    const enc::EncoderBackbone backbone(cfg.backbone);
    const train::Phase2Inputs inputs = phase2_inputs(cfg, backbone, a);
    const train::AblationTable table = what == "rank"
                                           ? train::rank_ablation(inputs, cfg.trainer, cfg.ablation.ranks)
                                           : train::prompt_ablation(inputs, cfg.trainer, cfg.ablation.prompts);
    write_text(dir / "table.csv", table.to_csv());
    write_text(dir / "table.txt", table.to_text());
    write_timing(dir, seconds_since(start));
    finish(ctx);
    return table;
}

double cmd_evaluate(const RunContext& ctx, std::uint64_t seed, tag::Split split) {
    const ExperimentConfig& cfg = ctx.config;
    const Phase1Artifacts a = load_phase1(ctx);
    const fs::path adapters = phase2_dir(ctx, cfg.trainer.mode) / fmt::format("seed_{}", seed);
    if (!fs::exists(adapters / "adapters.json")) {
        throw tag::DataError("missing " + (adapters / "adapters.json").string() + " (run the phase2 command first)");
    }
    const enc::EncoderBackbone backbone(cfg.backbone);
    train::Phase2Assembly as(backbone, a.embeddings, a.graph.num_classes(), cfg.trainer, seed);
    train::load_adapters(adapters, as);
    const train::PreparedInputs prepared = train::prepare_inputs(backbone, a.graph, a.vocab, cfg.trainer);
    const double metric = train::evaluate(as, prepared, a.graph, split);

    const fs::path dir = ctx.run_dir() / "evaluate";
    fs::create_directories(dir);
    write_text(dir / "config.ini", serialize_config(cfg));
    nlohmann::ordered_json j;
    j["mode"] = train::to_string(cfg.trainer.mode);
    j["seed"] = seed;
    j["split"] = tag::to_string(split);
    j["metric_name"] = metrics::metric_name(a.graph.num_classes());
    j["metric"] = metric;
    write_json(dir / fmt::format("{}_seed{}_{}.json", train::to_string(cfg.trainer.mode), seed, tag::to_string(split)), j);
    finish(ctx);
    return metric;
}

namespace {

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        const std::string item = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        std::size_t used = 0;
        std::uint64_t v = 0;
        try {
            v = std::stoull(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (item.empty() || used != item.size() || item[0] == '-') {
            throw UsageError("--seeds: '" + text + "' is not a comma-separated list of seeds");
        }
        seeds.push_back(v);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return seeds;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Two-phase graph-structure adapter pipeline for text-attributed graphs", "galora"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path, out_dir, seeds_text, log_level = "info";
    bool force = false;
    app.add_option("--config", config_path, "INI experiment config (defaults apply when absent)");
    app.add_option("--out", out_dir, "Run directory (overrides output.dir)");
    app.add_flag("--force", force, "Replace existing command outputs");
    app.add_option("--seeds", seeds_text, "Comma-separated phase-2 seeds (overrides trainer.seeds)");
    app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off");

    std::optional<std::uint64_t> data_seed, eval_seed;
    std::string baseline, what, split = "test";
    auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset");
    gen->add_option("--seed", data_seed, "Generator seed (overrides dataset.seed)");
    app.add_subcommand("phase1", "Encode node texts and train the GraphSAGE model");
    auto* p2 = app.add_subcommand("phase2", "Fine-tune adapters over the frozen encoder, one run per seed");
    p2->add_option("--baseline", baseline, "galora, text_only or lora_only (overrides trainer.mode)");
    app.add_subcommand("audit", "Print the trainable-parameter audit");
    auto* abl = app.add_subcommand("ablate", "Rank or prompt ablation");
    abl->add_option("--what", what, "rank or prompt")->required();
    auto* ev = app.add_subcommand("evaluate", "Evaluate saved phase-2 adapters");
    ev->add_option("--baseline", baseline, "Which phase-2 run to load");
    ev->add_option("--seed", eval_seed, "Seed of the saved run (default: first configured seed)");
    ev->add_option("--split", split, "train, val or test");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    auto logger = spdlog::stderr_color_mt("galora");
    spdlog::set_default_logger(logger);
    const auto level = spdlog::level::from_str(log_level);
    if (level == spdlog::level::off && log_level != "off") {
        std::cerr << "galora: error: unknown --log-level '" << log_level << "'\n";
        spdlog::drop("galora");
        return 2;
    }
    spdlog::set_level(level);

    int status = 0;
    try {
        RunContext ctx;
        ctx.config = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
        ctx.force = force;
        if (!out_dir.empty()) ctx.config.output_dir = out_dir;
        if (!seeds_text.empty()) ctx.config.trainer.seeds = parse_seed_list(seeds_text);
        if (!baseline.empty()) ctx.config.trainer.mode = train::parse_baseline(baseline);
        if (data_seed) ctx.config.dataset.generator.seed = *data_seed;
        ctx.config.validate();
        fs::create_directories(ctx.run_dir());

        const std::string cmd = app.get_subcommands().front()->get_name();
        if (cmd == "gen-data") {
            cmd_gen_data(ctx);
        } else if (cmd == "phase1") {
            const auto res = cmd_phase1(ctx);
            std::cout << fmt::format("phase1: best val {} {:.4f} at epoch {}, test {:.4f}\n", res.metric_name,
                                     res.best_val_metric, res.best_epoch, res.test_metric);
        } else if (cmd == "phase2") {
            const auto rep = cmd_phase2(ctx);
            std::cout << fmt::format("phase2 [{}]: {} mean {:.4f}", train::to_string(rep.mode), rep.metric_name, rep.mean);
            if (rep.std_dev) std::cout << fmt::format(" std {:.4f}", *rep.std_dev);
            std::cout << '\n';
        } else if (cmd == "audit") {
            cmd_audit(ctx, std::cout);
        } else if (cmd == "ablate") {
            std::cout << cmd_ablate(ctx, what).to_text();
        } else if (cmd == "evaluate") {
            const std::uint64_t seed = eval_seed.value_or(ctx.config.trainer.seeds.front());
            const tag::Split s = tag::parse_split(split);
            const double m = cmd_evaluate(ctx, seed, s);
            std::cout << fmt::format("evaluate [{}] seed {} {}: {:.4f}\n", train::to_string(ctx.config.trainer.mode), seed,
                                     split, m);
        }
    } catch (const ConfigError& e) {
        std::cerr << "galora: config error: " << e.what() << '\n';
        status = 2;
    } catch (const UsageError& e) {
        std::cerr << "galora: usage error: " << e.what() << '\n';
        status = 2;
    } catch (const tag::DataError& e) {
        std::cerr << "galora: data error: " << e.what() << '\n';
        status = 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "galora: invalid argument: " << e.what() << '\n';
        status = 2;
    } catch (const std::exception& e) {
        std::cerr << "galora: error: " << e.what() << '\n';
        status = 1;
    }
    spdlog::drop("galora");
    return status;
}

}  // namespace galora::cli
