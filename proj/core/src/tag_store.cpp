// SPDX-FileCopyrightText: © 2026 The galora authors
//
// SPDX-License-Identifier: Apache-2.0

#include "galora/tag_store.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>

#include "galora/rng.hpp"

namespace galora::tag {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string with_line(const std::string& what, std::size_t line) {
    return line ? "line " + std::to_string(line) + ": " + what : what;
}

bool blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

std::ifstream open_in(const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw DataError("cannot open " + p.string());
    return in;
}

std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + p.string() + " for writing");
    return out;
}

std::size_t parse_index(std::string_view tok, std::size_t line, std::string_view what) {
    std::size_t value = 0;
    const auto* end = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(tok.data(), end, value);
    if (ec != std::errc{} || ptr != end) {
        throw DataError("invalid " + std::string(what) + " '" + std::string(tok) + "'", line);
    }
    return value;
}

}  // namespace

std::string_view to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
    }
    return "?";
}

Split parse_split(std::string_view s) {
    if (s == "train") return Split::train;
    if (s == "val") return Split::val;
    if (s == "test") return Split::test;
    throw DataError("unknown split '" + std::string(s) + "'");
}

DataError::DataError(const std::string& what, std::size_t line)
    : std::runtime_error(with_line(what, line)), line_(line) {}

TextAttributedGraph::TextAttributedGraph(std::vector<NodeRecord> nodes, std::span<const Edge> edges,
                                         std::size_t num_classes)
    : nodes_(std::move(nodes)), num_classes_(num_classes) {
    if (num_classes_ == 0) throw DataError("graph needs at least one class");
    const std::size_t n = nodes_.size();
    for (std::size_t i = 0; i < n; ++i) {
        const auto& rec = nodes_[i];
        if (rec.id != i) throw DataError("node ids must be dense and ordered; found id " + std::to_string(rec.id) +
                                         " at position " + std::to_string(i));
        if (rec.label >= num_classes_) {
            throw DataError("label out of range: node " + std::to_string(rec.id) + " has label " +
                            std::to_string(rec.label) + " with " + std::to_string(num_classes_) + " classes");
        }
        if (blank(rec.text)) throw DataError("node " + std::to_string(rec.id) + " has empty text");
    }

    std::vector<Edge> directed;
    directed.reserve(edges.size() * 2);
    for (const auto& [u, v] : edges) {
        if (u >= n || v >= n) {
            throw DataError("dangling edge endpoint (" + std::to_string(u) + ", " + std::to_string(v) + ")");
        }
        if (u == v) throw DataError("self-loop on node " + std::to_string(u));
        directed.emplace_back(u, v);
        directed.emplace_back(v, u);
    }
    std::sort(directed.begin(), directed.end());
    directed.erase(std::unique(directed.begin(), directed.end()), directed.end());

    offsets_.assign(n + 1, 0);
    for (const auto& e : directed) ++offsets_[e.first + 1];
    for (std::size_t i = 0; i < n; ++i) offsets_[i + 1] += offsets_[i];
    indices_.reserve(directed.size());
    for (const auto& e : directed) indices_.push_back(e.second);
}

const NodeRecord& TextAttributedGraph::node(NodeId v) const {
    if (v >= nodes_.size()) throw std::out_of_range("node id " + std::to_string(v) + " out of range");
    return nodes_[v];
}

std::span<const NodeId> TextAttributedGraph::neighbors(NodeId v) const {
    if (v >= nodes_.size()) throw std::out_of_range("node id " + std::to_string(v) + " out of range");
    return {indices_.data() + offsets_[v], offsets_[v + 1] - offsets_[v]};
}

std::vector<TextAttributedGraph::Edge> TextAttributedGraph::edges() const {
    std::vector<Edge> out;
    out.reserve(num_edges());
    for (NodeId u = 0; u < nodes_.size(); ++u) {
        for (NodeId v : neighbors(u)) {
            if (u < v) out.emplace_back(u, v);
        }
    }
    return out;
}

bool TextAttributedGraph::has_splits() const noexcept {
    return !nodes_.empty() &&
           std::all_of(nodes_.begin(), nodes_.end(), [](const NodeRecord& r) { return r.split.has_value(); });
}

std::vector<NodeId> TextAttributedGraph::nodes_in_split(Split s) const {
    std::vector<NodeId> out;
    for (const auto& r : nodes_) {
        if (r.split == s) out.push_back(r.id);
    }
    return out;
}

std::vector<std::size_t> TextAttributedGraph::labels() const {
    std::vector<std::size_t> out(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) out[i] = nodes_[i].label;
    return out;
}

TextAttributedGraph TextAttributedGraph::with_splits(std::span<const Split> splits) const {
    if (splits.size() != nodes_.size()) {
        throw DataError("split assignment covers " + std::to_string(splits.size()) + " of " +
                        std::to_string(nodes_.size()) + " nodes");
    }
    TextAttributedGraph out = *this;
    for (std::size_t i = 0; i < splits.size(); ++i) out.nodes_[i].split = splits[i];
    return out;
}

std::span<const NodeId> neighbors(const TextAttributedGraph& graph, NodeId v) { return graph.neighbors(v); }

TextAttributedGraph load_graph(const std::filesystem::path& nodes_path, const std::filesystem::path& edges_path,
                               std::optional<std::size_t> num_classes) {
    std::vector<NodeRecord> records;
    std::vector<std::size_t> record_line;
    {
        auto in = open_in(nodes_path);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (blank(line)) continue;
            ordered_json j;
            try {
                j = ordered_json::parse(line);
            } catch (const nlohmann::json::parse_error& e) {
                throw DataError(std::string("malformed JSON: ") + e.what(), lineno);
            }
            for (const char* field : {"id", "text", "label"}) {
                if (!j.is_object() || !j.contains(field)) {
                    throw DataError(std::string("missing field '") + field + "'", lineno);
                }
            }
            if (!j["id"].is_number_unsigned()) throw DataError("field 'id' must be a non-negative integer", lineno);
            if (!j["label"].is_number_unsigned()) {
                throw DataError("field 'label' must be a non-negative integer", lineno);
            }
            if (!j["text"].is_string()) throw DataError("field 'text' must be a string", lineno);
            NodeRecord rec;
            rec.id = j["id"].get<std::size_t>();
            rec.label = j["label"].get<std::size_t>();
            rec.text = j["text"].get<std::string>();
            if (blank(rec.text)) throw DataError("node " + std::to_string(rec.id) + " has empty text", lineno);
            records.push_back(std::move(rec));
            record_line.push_back(lineno);
        }
    }

    const std::size_t n = records.size();
    if (n == 0) throw DataError("no nodes in " + nodes_path.string());
    std::vector<std::size_t> position(n, n);
    std::size_t max_label = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& r = records[i];
        if (r.id >= n) {
            throw DataError("non-dense ids: id " + std::to_string(r.id) + " with " + std::to_string(n) + " nodes",
                            record_line[i]);
        }
        if (position[r.id] != n) throw DataError("non-dense ids: duplicate id " + std::to_string(r.id), record_line[i]);
        position[r.id] = i;
        max_label = std::max(max_label, r.label);
    }
    const std::size_t classes = num_classes.value_or(max_label + 1);
    for (std::size_t i = 0; i < n; ++i) {
        if (records[i].label >= classes) {
            throw DataError("label out of range: node " + std::to_string(records[i].id) + " has label " +
                                std::to_string(records[i].label) + " with " + std::to_string(classes) + " classes",
                            record_line[i]);
        }
    }
    std::sort(records.begin(), records.end(), [](const NodeRecord& a, const NodeRecord& b) { return a.id < b.id; });

    std::vector<TextAttributedGraph::Edge> edges;
    {
        auto in = open_in(edges_path);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (blank(line) || line.front() == '#') continue;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            const auto tab = line.find('\t');
            if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
                throw DataError("expected two tab-separated node ids", lineno);
            }
            const auto u = parse_index(std::string_view(line).substr(0, tab), lineno, "node id");
            const auto v = parse_index(std::string_view(line).substr(tab + 1), lineno, "node id");
            if (u >= n || v >= n) {
                throw DataError("dangling edge endpoint " + std::to_string(u >= n ? u : v), lineno);
            }
            if (u == v) throw DataError("self-loop on node " + std::to_string(u), lineno);
            edges.emplace_back(u, v);
        }
    }
    return TextAttributedGraph(std::move(records), edges, classes);
}

void save_nodes(const TextAttributedGraph& graph, const std::filesystem::path& path) {
    auto out = open_out(path);
    for (const auto& r : graph.nodes()) {
        ordered_json j;
        j["id"] = r.id;
        j["text"] = r.text;
        j["label"] = r.label;
        out << j.dump() << '\n';
    }
}

void save_edges(const TextAttributedGraph& graph, const std::filesystem::path& path) {
    auto out = open_out(path);
    for (const auto& [u, v] : graph.edges()) out << u << '\t' << v << '\n';
}

void save_splits(const TextAttributedGraph& graph, const std::filesystem::path& path) {
    if (!graph.has_splits()) throw DataError("graph has no split assignment to save");
    auto out = open_out(path);
    for (const auto& r : graph.nodes()) {
        ordered_json j;
        j["id"] = r.id;
        j["split"] = std::string(to_string(*r.split));
        out << j.dump() << '\n';
    }
}

TextAttributedGraph load_splits(const TextAttributedGraph& graph, const std::filesystem::path& path) {
    const std::size_t n = graph.num_nodes();
    std::vector<std::optional<Split>> assigned(n);
    auto in = open_in(path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (blank(line)) continue;
        ordered_json j;
        try {
            j = ordered_json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw DataError(std::string("malformed JSON: ") + e.what(), lineno);
        }
        if (!j.is_object() || !j.contains("id") || !j.contains("split")) {
            throw DataError("split record needs 'id' and 'split'", lineno);
        }
        if (!j["id"].is_number_unsigned()) throw DataError("field 'id' must be a non-negative integer", lineno);
        const auto id = j["id"].get<std::size_t>();
        if (id >= n) throw DataError("split for unknown node " + std::to_string(id), lineno);
        if (assigned[id]) throw DataError("node " + std::to_string(id) + " assigned a split twice", lineno);
        try {
            assigned[id] = parse_split(j["split"].get<std::string>());
        } catch (const DataError& e) {
            throw DataError(e.what(), lineno);
        }
    }
    std::vector<Split> splits(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!assigned[i]) throw DataError("node " + std::to_string(i) + " has no split");
        splits[i] = *assigned[i];
    }
    return graph.with_splits(splits);
}

void SplitSpec::validate() const {
    for (double f : {train_frac, val_frac, test_frac}) {
        if (!(f > 0.0 && f < 1.0)) throw std::invalid_argument("split fractions must lie in (0, 1)");
    }
    if (std::abs(train_frac + val_frac + test_frac - 1.0) > 1e-9) {
        throw std::invalid_argument("split fractions must sum to 1");
    }
}

SplitSizes split_sizes(std::size_t class_size, const SplitSpec& spec) {
    const double n = static_cast<double>(class_size);
    SplitSizes s;
    s.val = static_cast<std::size_t>(std::llround(spec.val_frac * n));
    s.test = static_cast<std::size_t>(std::llround(spec.test_frac * n));
    if (s.val + s.test > class_size) s.test = class_size - s.val;
    s.train = class_size - s.val - s.test;
    return s;
}

TextAttributedGraph stratified_split(const TextAttributedGraph& graph, const SplitSpec& spec) {
    spec.validate();
    std::vector<std::vector<NodeId>> members(graph.num_classes());
    for (const auto& r : graph.nodes()) members[r.label].push_back(r.id);
    for (std::size_t c = 0; c < members.size(); ++c) {
        if (members[c].size() < 3) {
            throw DataError("class " + std::to_string(c) + " has " + std::to_string(members[c].size()) +
                            " nodes; stratified splitting needs at least 3");
        }
    }
    Rng rng = Rng::stream(spec.seed, 0x73706c6974ULL);
    std::vector<Split> splits(graph.num_nodes(), Split::train);
    for (auto& m : members) {
        rng.shuffle(m);
        const SplitSizes sz = split_sizes(m.size(), spec);
        for (std::size_t i = 0; i < m.size(); ++i) {
            splits[m[i]] = i < sz.train ? Split::train : (i < sz.train + sz.val ? Split::val : Split::test);
        }
    }
    return graph.with_splits(splits);
}

}  // namespace galora::tag
