// SPDX-FileCopyrightText: © 2026 The galora authors
//
// SPDX-License-Identifier: Apache-2.0

#include <fstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "cli/commands.hpp"
#include "cli/config.hpp"
#include "cli/manifest.hpp"
#include "test_support.hpp"

namespace galora::cli {
namespace {

namespace fs = std::filesystem;

constexpr const char* kTinyConfig = R"(
[dataset]
num_nodes = 60
num_classes = 2
avg_degree = 4
text_len = 6

[backbone]
layers = 2
d_model = 8
heads = 2
mlp_width = 16
max_len = 16
vocab_size = 128
seq_len = 8

[sage]
hidden = 8
classifier_width = 8
max_epochs = 5

[fusion]
rank = 2

[trainer]
epochs = 1
seeds = 0
)";

int run(std::vector<std::string> args) {
    args.insert(args.begin(), "galora");
    args.push_back("--log-level=off");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

class CliRun : public ::testing::Test {
protected:
    CliRun() : dir(testing::scratch_dir("cli_run")) {
        std::ofstream(dir / "tiny.ini") << kTinyConfig;
    }

    std::vector<std::string> base(const std::string& out) const {
        return {"--config", (dir / "tiny.ini").string(), "--out", (dir / out).string()};
    }

    int run_in(const std::string& out, std::vector<std::string> extra) const {
        auto args = base(out);
        args.insert(args.end(), extra.begin(), extra.end());
        return run(args);
    }

    fs::path dir;
};

TEST(Config, RoundTripsThroughIni) {
    ExperimentConfig cfg;
    EXPECT_EQ(parse_config(serialize_config(cfg)), cfg);
    cfg.trainer.seeds = {3, 9};
    cfg.trainer.mode = train::BaselineMode::lora_only;
    cfg.trainer.tie_fusion_to_lora = true;
    cfg.trainer.prompt = "node topic:";
    cfg.ablation.ranks = {1, 16};
    cfg.ablation.prompts = {"", "a b", "c:"};
    cfg.dataset.generator.text_noise = 0.125;
    cfg.output_dir = "elsewhere";
    EXPECT_EQ(parse_config(serialize_config(cfg)), cfg);
}

TEST(Config, EmptyTextGivesDefaults) { EXPECT_EQ(parse_config(""), ExperimentConfig{}); }

TEST(Config, UnknownKeysAndSectionsRejected) {
    EXPECT_THROW(parse_config("[trainer]\nlearning_rate = 0.1\n"), ConfigError);
    EXPECT_THROW(parse_config("[optimizer]\nlr = 0.1\n"), ConfigError);
    EXPECT_THROW(parse_config("[trainer]\nepochs = many\n"), ConfigError);
    EXPECT_THROW(parse_config("[trainer]\nmode = other\n"), ConfigError);
}

TEST(Config, ParsedFromText) {
    const auto cfg = parse_config(kTinyConfig);
    EXPECT_EQ(cfg.dataset.generator.num_nodes, 60u);
    EXPECT_EQ(cfg.backbone.layers, 2u);
    EXPECT_EQ(cfg.trainer.rank, 2u);
    EXPECT_EQ(cfg.trainer.seeds, (std::vector<std::uint64_t>{0}));
    EXPECT_NO_THROW(cfg.validate());
}

TEST(Manifest, Sha256OfKnownStrings) {
    EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Manifest, ExcludesTimingFiles) {
    const auto dir = testing::scratch_dir("cli_manifest");
    fs::create_directories(dir / "cmd");
    std::ofstream(dir / "cmd" / "config.ini") << "x";
    std::ofstream(dir / "cmd" / "out.json") << "{}";
    std::ofstream(dir / "cmd" / std::string(kTimingFile)) << "{}";
    write_manifest(dir, {});
    const auto j = nlohmann::json::parse(std::ifstream(dir / std::string(kManifestFile)));
    EXPECT_EQ(j["configs"].size(), 1u);
    EXPECT_EQ(j["artifacts"].size(), 1u);
    EXPECT_EQ(j["artifacts"]["cmd/out.json"], sha256_hex("{}"));
}

TEST(ExitCodes, HelpSucceeds) { EXPECT_EQ(run({"--help"}), 0); }

TEST(ExitCodes, UsageErrorsReturnTwo) {
    EXPECT_EQ(run({}), 2);
    EXPECT_EQ(run({"unknown-command"}), 2);
    EXPECT_EQ(run({"ablate"}), 2);
    EXPECT_EQ(run({"phase2", "--baseline", "other"}), 2);
    EXPECT_EQ(run({"--seeds", "1,x", "audit"}), 2);
}

TEST_F(CliRun, BadConfigReturnsTwo) {
    std::ofstream(dir / "bad.ini") << "[trainer]\nwhatever = 1\n";
    EXPECT_EQ(run({"--config", (dir / "bad.ini").string(), "--out", (dir / "bad").string(), "audit"}), 2);
    EXPECT_EQ(run({"--config", (dir / "missing.ini").string(), "audit"}), 2);
}

TEST_F(CliRun, BadAblationKindReturnsTwo) {
    ASSERT_EQ(run_in("abl", {"gen-data"}), 0);
    ASSERT_EQ(run_in("abl", {"phase1"}), 0);
    EXPECT_EQ(run_in("abl", {"ablate", "--what", "depth"}), 2);
}

TEST_F(CliRun, MissingPrerequisitesReturnTwo) {
    EXPECT_EQ(run_in("empty", {"phase1"}), 2);
    ASSERT_EQ(run_in("p1", {"gen-data"}), 0);
    EXPECT_EQ(run_in("p1", {"phase2"}), 2);
    EXPECT_EQ(run_in("p1", {"evaluate"}), 2);
}

TEST_F(CliRun, ExistingOutputNeedsForce) {
    ASSERT_EQ(run_in("force", {"gen-data"}), 0);
    EXPECT_EQ(run_in("force", {"gen-data"}), 2);
    EXPECT_EQ(run_in("force", {"--force", "gen-data"}), 0);
}

TEST_F(CliRun, GeneratedDataReloadsAndDependsOnSeed) {
    ASSERT_EQ(run_in("s1", {"gen-data", "--seed", "1"}), 0);
    ASSERT_EQ(run_in("s1b", {"gen-data", "--seed", "1"}), 0);
    ASSERT_EQ(run_in("s2", {"gen-data", "--seed", "2"}), 0);
    // config.ini records the output directory, so only the data files are compared.
    auto data_files = [&](const char* run) {
        auto tree = testing::read_tree(dir / run / "data");
        tree.erase("config.ini");
        return tree;
    };
    const auto a = data_files("s1");
    EXPECT_EQ(a.size(), 3u);
    EXPECT_EQ(a, data_files("s1b"));
    EXPECT_NE(a.at("nodes.jsonl"), testing::read_tree(dir / "s2" / "data").at("nodes.jsonl"));
    const auto g = tag::load_graph(dir / "s1" / "data" / "nodes.jsonl", dir / "s1" / "data" / "edges.tsv", 2);
    EXPECT_EQ(g.num_nodes(), 60u);
    const auto manifest = nlohmann::json::parse(std::ifstream(dir / "s1" / std::string(kManifestFile)));
    EXPECT_EQ(manifest["inputs"].size(), 3u);
}

TEST_F(CliRun, FullPipelineEvaluatesSavedAdapters) {
    for (const char* cmd : {"gen-data", "phase1", "phase2", "audit"}) ASSERT_EQ(run_in("full", {cmd}), 0) << cmd;
    ASSERT_EQ(run_in("full", {"evaluate", "--split", "test"}), 0);
    const auto report = nlohmann::json::parse(std::ifstream(dir / "full" / "phase2" / "galora" / "report.json"));
    const auto eval = nlohmann::json::parse(std::ifstream(dir / "full" / "evaluate" / "galora_seed0_test.json"));
    EXPECT_TRUE(report.contains("audit"));
    EXPECT_TRUE(eval.is_object());
    EXPECT_TRUE(fs::exists(dir / "full" / "audit" / "audit.json"));
    EXPECT_EQ(run_in("full", {"evaluate", "--split", "holdout"}), 2);
}

}  // namespace
}  // namespace galora::cli
