// SPDX-FileCopyrightText: © 2026 The galora authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "galora/tag_store.hpp"

namespace galora::enc {

using TokenId = std::size_t;

/// Lowercased maximal runs of ASCII letters and digits; everything else separates.
std::vector<std::string> split_words(std::string_view text);

class Vocabulary {
public:
    static constexpr TokenId kPad = 0;
    static constexpr TokenId kUnk = 1;
    static constexpr TokenId kCls = 2;
    static constexpr std::size_t kReserved = 3;

    Vocabulary();
    /// `tokens` are the non-reserved entries in id order, starting at kReserved.
    explicit Vocabulary(std::vector<std::string> tokens);

    /// kUnk for unknown tokens.
    TokenId id(std::string_view token) const;
    bool contains(std::string_view token) const;
    const std::string& token(TokenId id) const;
    std::size_t size() const noexcept { return tokens_.size(); }

    /// One token per line in id order, reserved entries included.
    void save(const std::filesystem::path& path) const;
    static Vocabulary load(const std::filesystem::path& path);

    friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, TokenId> index_;
};

/// Reads the text of one node. Lets callers observe which nodes are read.
using TextSource = std::function<std::string_view(tag::NodeId)>;

/**
 * Vocabulary from train-split text only. Keeps the `max_size` most frequent
 * words, ties broken lexicographically. Words of `extra_texts` (prompts) that
 * did not make the cut are appended after them and do not count toward
 * `max_size`. Throws tag::DataError when the graph has no splits or the
 * training text is empty.
 */
Vocabulary build_vocab(const tag::TextAttributedGraph& graph, std::size_t max_size,
                       std::span<const std::string> extra_texts = {}, const TextSource& source = {});

struct PromptSpec {
    std::string prefix;
};

struct TokenizedText {
    std::vector<TokenId> ids;
    std::vector<std::uint8_t> mask;
    bool prompt_truncated = false;

    std::size_t length() const noexcept { return ids.size(); }
    std::size_t visible() const noexcept;
    /// The leading visible positions only. Masked positions are always
    /// trailing, contribute exact zeros to attention, and are never pooled,
    /// so visible hidden states are bitwise unchanged by the trim.
    TokenizedText visible_prefix() const;
};

/**
 * [CLS] + prompt + text, truncated to `cap` and padded with kPad. Throws
 * std::invalid_argument for cap < 4. A prompt that does not fit in cap - 1
 * positions is truncated, leaves no room for text, and logs a warning.
 */
TokenizedText tokenize(std::string_view text, const PromptSpec& prompt, const Vocabulary& vocab, std::size_t cap);

}  // namespace galora::enc
