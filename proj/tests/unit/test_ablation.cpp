// SPDX-FileCopyrightText: © 2026 The galora authors
//
// SPDX-License-Identifier: Apache-2.0

#include <sstream>

#include <gtest/gtest.h>

#include "galora/ablation.hpp"
#include "test_support.hpp"

namespace galora::train {
namespace {

class Ablation : public ::testing::Test {
protected:
    Ablation() : setup(testing::micro_setup(40, 2, 4)), backbone(setup.backbone) {
        emb = testing::random_embeddings(40, setup.graph_dim, 6);
        base.rank = setup.rank;
        base.seq_len = setup.seq_len;
        base.epochs = 2;
        base.batch_size = 8;
        base.seeds = {0, 1};
    }

    Phase2Inputs inputs() const { return {&backbone, &setup.graph, &setup.vocab, &emb, std::nullopt}; }

    testing::MicroSetup setup;
    enc::EncoderBackbone backbone;
    sage::SageEmbeddings emb;
    RunConfig base;
};

TEST_F(Ablation, RankSweepGrowsTrainableCount) {
    const std::vector<std::size_t> ranks{2, 4, 8};
    const auto table = rank_ablation(inputs(), base, ranks);
    ASSERT_EQ(table.rows.size(), 3u);
    EXPECT_EQ(table.kind, "rank");
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(table.rows[i].rank, ranks[i]);
        EXPECT_EQ(table.rows[i].label, std::to_string(ranks[i]));
        EXPECT_TRUE(table.rows[i].metric_std.has_value());
        if (i > 0) {
            EXPECT_GT(table.rows[i].trainable_params, table.rows[i - 1].trainable_params);
        }
    }
}

TEST_F(Ablation, RankRowEqualsStandaloneRun) {
    const std::vector<std::size_t> ranks{3};
    const auto row = rank_ablation(inputs(), base, ranks).rows[0];
    RunConfig cfg = base;
    cfg.rank = 3;
    const auto rep = seed_sweep(inputs(), cfg);
    EXPECT_EQ(row.metric_mean, rep.mean);
    EXPECT_EQ(row.metric_std, rep.std_dev);
    EXPECT_EQ(row.trainable_params, rep.audit.phase2_trainable);
}

TEST_F(Ablation, ZeroRankAndEmptyListsRejected) {
    const std::vector<std::size_t> with_zero{2, 0};
    EXPECT_THROW(rank_ablation(inputs(), base, with_zero), std::invalid_argument);
    EXPECT_THROW(rank_ablation(inputs(), base, {}), std::invalid_argument);
    EXPECT_THROW(prompt_ablation(inputs(), base, {}), std::invalid_argument);
}

TEST_F(Ablation, EmptyPromptEqualsBaseRun) {
    const std::vector<std::string> prompts{""};
    const auto table = prompt_ablation(inputs(), base, prompts);
    const auto rep = seed_sweep(inputs(), base);
    ASSERT_EQ(table.rows.size(), 1u);
    EXPECT_EQ(table.rows[0].metric_mean, rep.mean);
    EXPECT_EQ(table.rows[0].trainable_params, rep.audit.phase2_trainable);
}

TEST_F(Ablation, PromptRowsFollowInputOrder) {
    const std::vector<std::string> prompts{"graph node", "topic"};
    const auto a = prompt_ablation(inputs(), base, prompts);
    const auto b = prompt_ablation(inputs(), base, prompts);
    ASSERT_EQ(a.rows.size(), 2u);
    EXPECT_EQ(a.rows[0].prompt, "graph node");
    EXPECT_EQ(a.rows[1].prompt, "topic");
    // Prompts add no parameters.
    EXPECT_EQ(a.rows[0].trainable_params, a.rows[1].trainable_params);
    EXPECT_EQ(a.to_csv(), b.to_csv());
}

TEST(AblationTableTest, CsvSchema) {
    AblationTable t;
    t.kind = "prompt";
    t.metric_name = "accuracy";
    t.rows.push_back({"a, b", 4, "a, b", 0.5, 0.125, 100});
    t.rows.push_back({"", 4, "", 0.25, std::nullopt, 100});
    std::istringstream csv(t.to_csv());
    std::string line;
    std::getline(csv, line);
    EXPECT_EQ(line, "prompt,metric_mean,metric_std,trainable_params");
    std::getline(csv, line);
    EXPECT_EQ(line, "\"a, b\",0.500000,0.125000,100");
    std::getline(csv, line);
    EXPECT_EQ(line, ",0.250000,,100");
    EXPECT_FALSE(std::getline(csv, line));
    EXPECT_NE(t.to_text().find("(none)"), std::string::npos);
}

}  // namespace
}  // namespace galora::train
