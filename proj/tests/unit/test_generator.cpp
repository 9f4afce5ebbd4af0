// SPDX-FileCopyrightText: © 2026 The galora authors
//
// SPDX-License-Identifier: Apache-2.0

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "galora/generator.hpp"
#include "test_support.hpp"

namespace galora::tag {
namespace {

std::string file_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string serialized(const TextAttributedGraph& g, const std::string& name) {
    const auto dir = testing::scratch_dir(name);
    save_nodes(g, dir / "n.jsonl");
    save_edges(g, dir / "e.tsv");
    return file_bytes(dir / "n.jsonl") + "|" + file_bytes(dir / "e.tsv");
}

GeneratorParams small(std::uint64_t seed = 0) {
    GeneratorParams p;
    p.num_nodes = 300;
    p.num_classes = 3;
    p.avg_degree = 6.0;
    p.seed = seed;
    return p;
}

// Plurality of labels over distinct nodes within two hops, recomputed with sets.
double two_hop_oracle(const TextAttributedGraph& g) {
    double hits = 0.0;
    for (NodeId v = 0; v < g.num_nodes(); ++v) {
        std::set<NodeId> reach;
        for (NodeId u : g.neighbors(v)) {
            reach.insert(u);
            for (NodeId w : g.neighbors(u)) reach.insert(w);
        }
        reach.erase(v);
        if (reach.empty()) {
            hits += 1.0 / static_cast<double>(g.num_classes());
            continue;
        }
        std::map<std::size_t, std::size_t> votes;
        for (NodeId u : reach) ++votes[g.node(u).label];
        std::size_t best = 0;
        for (const auto& [label, n] : votes) best = std::max(best, n);
        std::size_t tied = 0;
        bool own = false;
        for (const auto& [label, n] : votes) {
            if (n == best) {
                ++tied;
                own = own || label == g.node(v).label;
            }
        }
        if (own) hits += 1.0 / static_cast<double>(tied);
    }
    return hits / static_cast<double>(g.num_nodes());
}

TEST(Generator, SameParamsGiveIdenticalBytes) {
    EXPECT_EQ(serialized(generate_synthetic_tag(small()), "gen_a"), serialized(generate_synthetic_tag(small()), "gen_b"));
    EXPECT_NE(serialized(generate_synthetic_tag(small(0)), "gen_a"),
              serialized(generate_synthetic_tag(small(1)), "gen_b"));
}

TEST(Generator, NoiseFreeTextDeterminesClass) {
    GeneratorParams p = small();
    p.text_noise = 0.0;
    std::map<std::string, std::size_t> owner;
    for (std::size_t c = 0; c < p.num_classes; ++c) {
        for (std::size_t i = 0; i < p.topic_vocab_size; ++i) owner[topic_word(c, i, p.topic_vocab_size)] = c;
    }
    ASSERT_EQ(owner.size(), p.num_classes * p.topic_vocab_size);
    const auto g = generate_synthetic_tag(p);
    for (const auto& node : g.nodes()) {
        std::map<std::size_t, std::size_t> votes;
        std::istringstream words(node.text);
        std::size_t count = 0;
        for (std::string w; words >> w; ++count) ++votes[owner.at(w)];
        EXPECT_EQ(count, p.text_len);
        EXPECT_EQ(votes.size(), 1u);
        EXPECT_EQ(votes.begin()->first, node.label);
    }
}

TEST(Generator, CorruptedTextFractionTracksNoise) {
    GeneratorParams p;
    p.text_noise = 0.35;
    const auto t = generate_synthetic_tag_detailed(p);
    std::size_t corrupted = 0;
    for (NodeId v = 0; v < t.graph.num_nodes(); ++v) {
        corrupted += t.text_class[v] != t.graph.node(v).label ? 1 : 0;
    }
    // Binomial(2000, 0.35) has sd ~ 21 nodes.
    EXPECT_NEAR(static_cast<double>(corrupted), 700.0, 100.0);
}

TEST(Generator, IntraClassFractionMatchesTarget) {
    const auto t = generate_synthetic_tag_detailed(GeneratorParams{});
    std::size_t intra = 0;
    const auto edges = t.graph.edges();
    for (const auto& [a, b] : edges) intra += t.graph.node(a).label == t.graph.node(b).label ? 1 : 0;
    EXPECT_NEAR(static_cast<double>(intra) / static_cast<double>(edges.size()), t.intra_fraction_target, 0.03);
    EXPECT_NEAR(2.0 * static_cast<double>(edges.size()) / 2000.0, 8.0, 0.5);
}

TEST(Generator, TwoHopPluralityReachesStructureSignal) {
    const auto g = generate_synthetic_tag(GeneratorParams{});
    const double acc = two_hop_plurality_accuracy(g);
    EXPECT_NEAR(acc, two_hop_oracle(g), 1e-12);
    EXPECT_GE(acc, 0.9);
}

TEST(Generator, ClassesAreBalancedAndGraphIsValid) {
    const auto g = generate_synthetic_tag(small());
    std::vector<std::size_t> sizes(3, 0);
    for (const auto& n : g.nodes()) ++sizes[n.label];
    for (auto s : sizes) EXPECT_EQ(s, 100u);
    for (NodeId v = 0; v < g.num_nodes(); ++v) {
        for (NodeId u : g.neighbors(v)) EXPECT_NE(u, v);
    }
}

TEST(Generator, DegenerateParamsRejected) {
    auto bad = [](auto mutate) {
        GeneratorParams p;
        mutate(p);
        return p;
    };
    EXPECT_THROW(generate_synthetic_tag(bad([](auto& p) { p.structure_signal = 0.5; })), std::invalid_argument);
    EXPECT_THROW(generate_synthetic_tag(bad([](auto& p) { p.structure_signal = 0.4; })), std::invalid_argument);
    EXPECT_THROW(generate_synthetic_tag(bad([](auto& p) { p.text_noise = 1.0; })), std::invalid_argument);
    EXPECT_THROW(generate_synthetic_tag(bad([](auto& p) { p.num_classes = 1; })), std::invalid_argument);
    EXPECT_THROW(generate_synthetic_tag(bad([](auto& p) { p.num_nodes = 30; })), std::invalid_argument);
    EXPECT_THROW(generate_synthetic_tag(bad([](auto& p) { p.avg_degree = 0.5; })), std::invalid_argument);
}

TEST(Generator, TopicWordsAreDistinct) {
    std::set<std::string> seen;
    for (std::size_t c = 0; c < 8; ++c) {
        for (std::size_t i = 0; i < 40; ++i) EXPECT_TRUE(seen.insert(topic_word(c, i, 40)).second);
    }
}

}  // namespace
}  // namespace galora::tag
