// SPDX-FileCopyrightText: © 2026 The galora authors
//
// SPDX-License-Identifier: Apache-2.0

#include <random>

#include <gtest/gtest.h>

#include "galora/metrics.hpp"
#include "test_support.hpp"

namespace galora::metrics {
namespace {

TEST(RocAuc, PerfectAndTiedPairs) {
    const std::size_t labels[] = {1, 0};
    const double perfect[] = {0.9, 0.1};
    const double tied[] = {0.5, 0.5};
    EXPECT_EQ(roc_auc(perfect, labels), 1.0);
    EXPECT_EQ(roc_auc(tied, labels), 0.5);
}

TEST(RocAuc, MatchesPairCountingOracleExactly) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> normal;
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> scores(200);
        std::vector<std::size_t> labels(200);
        for (std::size_t i = 0; i < 200; ++i) {
            scores[i] = trial % 3 == 0 ? static_cast<double>(rng() % 5) : normal(rng);
            labels[i] = rng() % 2;
        }
        labels[0] = 0;
        labels[1] = 1;
        EXPECT_EQ(roc_auc(scores, labels), testing::auc_pair_count(scores, labels)) << trial;
    }
}

TEST(RocAuc, BoundedAndInvariantUnderMonotoneTransform) {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> normal;
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> scores(60), moved(60);
        std::vector<std::size_t> labels(60);
        for (std::size_t i = 0; i < 60; ++i) {
            scores[i] = normal(rng);
            moved[i] = 2.0 * scores[i] + 1.0;
            labels[i] = i % 2;
        }
        const double auc = roc_auc(scores, labels);
        EXPECT_GE(auc, 0.0);
        EXPECT_LE(auc, 1.0);
        EXPECT_EQ(roc_auc(moved, labels), auc);
    }
}

TEST(RocAuc, SingleClassRejected) {
    const double scores[] = {0.1, 0.2};
    const std::size_t labels[] = {1, 1};
    EXPECT_THROW(roc_auc(scores, labels), std::invalid_argument);
}

TEST(Accuracy, MatchesOracleWithTies) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        num::Tensor logits(100, 3);
        for (auto& v : logits.values()) v = static_cast<double>(rng() % 3);
        std::vector<std::size_t> labels(100);
        for (auto& l : labels) l = rng() % 3;
        EXPECT_EQ(accuracy(logits, labels), testing::accuracy_oracle(logits, labels));
    }
}

TEST(PrimaryMetric, BinaryRanksByClassOneProbability) {
    // Softmax of two logits is monotone in their difference.
    const num::Tensor logits({4, 2}, {0.0, 1.0, 2.0, 0.0, 0.5, 0.4, -1.0, 3.0});
    const std::size_t labels[] = {1, 0, 0, 1};
    const double diff[] = {1.0, -2.0, -0.1, 4.0};
    EXPECT_EQ(primary_metric(logits, labels), roc_auc(diff, labels));
    const std::size_t three[] = {1, 0, 0};
    EXPECT_EQ(primary_metric(num::Tensor({3, 3}, {0, 1, 0, 1, 0, 0, 0, 0, 1}), three), 2.0 / 3.0);
}

TEST(MetricName, BinaryUsesAuc) {
    EXPECT_EQ(metric_name(2), "roc_auc");
    EXPECT_EQ(metric_name(4), "accuracy");
}

}  // namespace
}  // namespace galora::metrics
