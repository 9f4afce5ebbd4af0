// SPDX-FileCopyrightText: © 2026 The galora authors
//
// SPDX-License-Identifier: Apache-2.0

#include "galora/vocabulary.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <stdexcept>

#include <spdlog/spdlog.h>

namespace galora::enc {

std::vector<std::string> split_words(std::string_view text) {
    std::vector<std::string> words;
    std::string cur;
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        const bool alnum = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
        if (alnum) {
            cur += static_cast<char>(c >= 'A' && c <= 'Z' ? c - 'A' + 'a' : c);
        } else if (!cur.empty()) {
            words.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) words.push_back(std::move(cur));
    return words;
}

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens) {
    tokens_ = {"<pad>", "<unk>", "<cls>"};
    tokens_.reserve(kReserved + tokens.size());
    for (auto& t : tokens) tokens_.push_back(std::move(t));
    for (TokenId i = 0; i < tokens_.size(); ++i) {
        if (!index_.emplace(tokens_[i], i).second) {
            throw std::invalid_argument("vocabulary: duplicate token '" + tokens_[i] + "'");
        }
    }
}

TokenId Vocabulary::id(std::string_view token) const {
    const auto it = index_.find(std::string(token));
    return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view token) const { return index_.count(std::string(token)) != 0; }

const std::string& Vocabulary::token(TokenId id) const {
    if (id >= tokens_.size()) throw std::out_of_range("vocabulary: id " + std::to_string(id) + " out of range");
    return tokens_[id];
}

void Vocabulary::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (const auto& t : tokens_) out << t << '\n';
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw tag::DataError("cannot open vocabulary " + path.string());
    std::vector<std::string> all;
    std::string line;
    while (std::getline(in, line)) all.push_back(line);
    if (all.size() < kReserved || all[0] != "<pad>" || all[1] != "<unk>" || all[2] != "<cls>") {
        throw tag::DataError("vocabulary " + path.string() + " lacks the reserved header");
    }
    return Vocabulary(std::vector<std::string>(all.begin() + kReserved, all.end()));
}

Vocabulary build_vocab(const tag::TextAttributedGraph& graph, std::size_t max_size,
                       std::span<const std::string> extra_texts, const TextSource& source) {
    if (!graph.has_splits()) throw tag::DataError("build_vocab: graph has no split assignment");
    std::map<std::string, std::size_t> counts;
    for (tag::NodeId v : graph.nodes_in_split(tag::Split::train)) {
        const std::string_view text = source ? source(v) : std::string_view(graph.node(v).text);
        for (auto& w : split_words(text)) ++counts[std::move(w)];
    }
    if (counts.empty()) throw tag::DataError("build_vocab: training corpus is empty");

    std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    if (ranked.size() > max_size) ranked.resize(max_size);

    std::vector<std::string> tokens;
    tokens.reserve(ranked.size());
    for (auto& [w, _] : ranked) tokens.push_back(std::move(w));
    for (const auto& text : extra_texts) {
        for (auto& w : split_words(text)) {
            if (std::find(tokens.begin(), tokens.end(), w) == tokens.end()) tokens.push_back(std::move(w));
        }
    }
    return Vocabulary(std::move(tokens));
}

std::size_t TokenizedText::visible() const noexcept {
    return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

TokenizedText TokenizedText::visible_prefix() const {
    const std::size_t n = visible();
    TokenizedText out;
    out.ids.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n));
    out.mask.assign(n, 1);
    out.prompt_truncated = prompt_truncated;
    return out;
}

TokenizedText tokenize(std::string_view text, const PromptSpec& prompt, const Vocabulary& vocab, std::size_t cap) {
    if (cap < 4) throw std::invalid_argument("tokenize: sequence cap must be at least 4, got " + std::to_string(cap));
    TokenizedText out;
    out.ids.assign(cap, Vocabulary::kPad);
    out.mask.assign(cap, 0);
    std::size_t pos = 0;
    out.ids[pos] = Vocabulary::kCls;
    out.mask[pos++] = 1;

    const auto prompt_words = split_words(prompt.prefix);
    if (prompt_words.size() > cap - 1) {
        out.prompt_truncated = true;
        spdlog::warn("prompt has {} tokens but the cap leaves room for {}; prompt truncated, node text dropped",
                     prompt_words.size(), cap - 1);
    }
    for (const auto& w : prompt_words) {
        if (pos == cap) break;
        out.ids[pos] = vocab.id(w);
        out.mask[pos++] = 1;
    }
    if (!out.prompt_truncated) {
        for (const auto& w : split_words(text)) {
            if (pos == cap) break;
            out.ids[pos] = vocab.id(w);
            out.mask[pos++] = 1;
        }
    }
    return out;
}

}  // namespace galora::enc
