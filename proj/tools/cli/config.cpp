// SPDX-FileCopyrightText: © 2026 The galora authors
//
// SPDX-License-Identifier: Apache-2.0

#include "cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>

namespace galora::cli {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(std::string_view(s).substr(start, pos == std::string::npos ? std::string::npos : pos - start)));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    T out{};
    const char* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc() || ptr != end || value.empty()) {
        throw ConfigError(fmt::format("{}: '{}' is not a valid number", key, value));
    }
    return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true") return true;
    if (value == "false") return false;
    throw ConfigError(fmt::format("{}: expected true or false, got '{}'", key, value));
}

template <typename T>
std::vector<T> parse_number_list(const std::string& key, const std::string& value) {
    std::vector<T> out;
    if (value.empty()) return out;
    for (const auto& item : split_list(value, ',')) out.push_back(parse_number<T>(key, item));
    return out;
}

template <typename T>
std::string join_numbers(const std::vector<T>& v) {
    return fmt::format("{}", fmt::join(v, ","));
}

struct Field {
    std::string section;
    std::string key;
    std::function<std::string(const ExperimentConfig&)> get;
    std::function<void(ExperimentConfig&, const std::string&)> set;
};

template <typename T, typename Access>
Field number(std::string section, std::string key, Access access) {
    const std::string full = section + "." + key;
    return {std::move(section), std::move(key),
            [access](const ExperimentConfig& c) { return fmt::format("{}", access(c)); },
            [access, full](ExperimentConfig& c, const std::string& v) { access(c) = parse_number<T>(full, v); }};
}

template <typename Access>
Field boolean(std::string section, std::string key, Access access) {
    const std::string full = section + "." + key;
    return {std::move(section), std::move(key),
            [access](const ExperimentConfig& c) {
                return std::string(access(c) ? "true" : "false");
            },
            [access, full](ExperimentConfig& c, const std::string& v) { access(c) = parse_bool(full, v); }};
}

template <typename Access>
Field text(std::string section, std::string key, Access access) {
    return {std::move(section), std::move(key),
            [access](const ExperimentConfig& c) { return std::string(access(c)); },
            [access](ExperimentConfig& c, const std::string& v) { access(c) = v; }};
}

std::string placement_layers(const ExperimentConfig& c, bool pass1) {
    if (!c.trainer.placement) return {};
    return join_numbers(pass1 ? c.trainer.placement->pass1_layers : c.trainer.placement->pass2_layers);
}

void set_placement_layers(ExperimentConfig& c, const std::string& key, const std::string& v, bool pass1) {
    auto layers = parse_number_list<std::size_t>(key, v);
    if (layers.empty() && !c.trainer.placement) return;
    if (!c.trainer.placement) c.trainer.placement = fusion::Placement{};
    (pass1 ? c.trainer.placement->pass1_layers : c.trainer.placement->pass2_layers) = std::move(layers);
}

const std::vector<Field>& fields() {
    using C = ExperimentConfig;
    static const std::vector<Field> table = [] {
        std::vector<Field> f;
        // [dataset]
        f.push_back(text("dataset", "nodes", [](auto& c) -> auto& { return c.dataset.nodes; }));
        f.back().get = [](const C& c) { return c.dataset.nodes.string(); };
        f.push_back(text("dataset", "edges", [](auto& c) -> auto& { return c.dataset.edges; }));
        f.back().get = [](const C& c) { return c.dataset.edges.string(); };
        f.push_back(text("dataset", "splits", [](auto& c) -> auto& { return c.dataset.splits; }));
        f.back().get = [](const C& c) { return c.dataset.splits.string(); };
        f.push_back(number<std::size_t>("dataset", "num_nodes", [](auto& c) -> auto& { return c.dataset.generator.num_nodes; }));
        f.push_back(number<std::size_t>("dataset", "num_classes", [](auto& c) -> auto& { return c.dataset.generator.num_classes; }));
        f.push_back(number<double>("dataset", "avg_degree", [](auto& c) -> auto& { return c.dataset.generator.avg_degree; }));
        f.push_back(number<std::size_t>("dataset", "topic_vocab_size",
                                        [](auto& c) -> auto& { return c.dataset.generator.topic_vocab_size; }));
        f.push_back(number<std::size_t>("dataset", "text_len", [](auto& c) -> auto& { return c.dataset.generator.text_len; }));
        f.push_back(number<double>("dataset", "text_noise", [](auto& c) -> auto& { return c.dataset.generator.text_noise; }));
        f.push_back(number<double>("dataset", "structure_signal",
                                   [](auto& c) -> auto& { return c.dataset.generator.structure_signal; }));
        f.push_back(number<std::uint64_t>("dataset", "seed", [](auto& c) -> auto& { return c.dataset.generator.seed; }));
        f.push_back(number<double>("dataset", "train_frac", [](auto& c) -> auto& { return c.dataset.split.train_frac; }));
        f.push_back(number<double>("dataset", "val_frac", [](auto& c) -> auto& { return c.dataset.split.val_frac; }));
        f.push_back(number<double>("dataset", "test_frac", [](auto& c) -> auto& { return c.dataset.split.test_frac; }));
        f.push_back(number<std::uint64_t>("dataset", "split_seed", [](auto& c) -> auto& { return c.dataset.split.seed; }));
        // [backbone]
        f.push_back(number<std::size_t>("backbone", "layers", [](auto& c) -> auto& { return c.backbone.layers; }));
        f.push_back(number<std::size_t>("backbone", "d_model", [](auto& c) -> auto& { return c.backbone.d_model; }));
        f.push_back(number<std::size_t>("backbone", "heads", [](auto& c) -> auto& { return c.backbone.heads; }));
        f.push_back(number<std::size_t>("backbone", "mlp_width", [](auto& c) -> auto& { return c.backbone.mlp_width; }));
        f.push_back(number<std::size_t>("backbone", "max_len", [](auto& c) -> auto& { return c.backbone.max_len; }));
        f.push_back(number<std::size_t>("backbone", "vocab_size", [](auto& c) -> auto& { return c.backbone.vocab_size; }));
        f.push_back(number<std::uint64_t>("backbone", "seed", [](auto& c) -> auto& { return c.backbone.seed; }));
        f.push_back(number<std::size_t>("backbone", "seq_len", [](auto& c) -> auto& { return c.trainer.seq_len; }));
        f.push_back({"backbone", "pooling", [](const C& c) { return std::string(enc::to_string(c.trainer.pooling)); },
                     [](C& c, const std::string& v) { c.trainer.pooling = enc::parse_pooling(v); }});
        // [sage]
        f.push_back(number<std::size_t>("sage", "hidden", [](auto& c) -> auto& { return c.sage.hidden; }));
        f.push_back(number<std::size_t>("sage", "classifier_width", [](auto& c) -> auto& { return c.sage.classifier_width; }));
        f.push_back(number<std::uint64_t>("sage", "seed", [](auto& c) -> auto& { return c.sage.seed; }));
        f.push_back(number<double>("sage", "lr", [](auto& c) -> auto& { return c.sage.schedule.lr; }));
        f.push_back(number<double>("sage", "weight_decay", [](auto& c) -> auto& { return c.sage.schedule.weight_decay; }));
        f.push_back(number<std::size_t>("sage", "max_epochs", [](auto& c) -> auto& { return c.sage.schedule.max_epochs; }));
        f.push_back(number<std::size_t>("sage", "patience", [](auto& c) -> auto& { return c.sage.schedule.patience; }));
        // [fusion]
        f.push_back(number<std::size_t>("fusion", "rank", [](auto& c) -> auto& { return c.trainer.rank; }));
        f.push_back({"fusion", "pass1_layers", [](const C& c) { return placement_layers(c, true); },
                     [](C& c, const std::string& v) { set_placement_layers(c, "fusion.pass1_layers", v, true); }});
        f.push_back({"fusion", "pass2_layers", [](const C& c) { return placement_layers(c, false); },
                     [](C& c, const std::string& v) { set_placement_layers(c, "fusion.pass2_layers", v, false); }});
        f.push_back(boolean("fusion", "fusion", [](auto& c) -> auto& { return c.trainer.fusion; }));
        f.push_back(boolean("fusion", "lora_pairs", [](auto& c) -> auto& { return c.trainer.lora_pairs; }));
        f.push_back(boolean("fusion", "tie_to_lora", [](auto& c) -> auto& { return c.trainer.tie_fusion_to_lora; }));
        f.push_back({"fusion", "form", [](const C& c) { return std::string(fusion::to_string(c.trainer.fusion_form)); },
                     [](C& c, const std::string& v) { c.trainer.fusion_form = fusion::parse_fusion_form(v); }});
        f.push_back({"fusion", "lora_targets", [](const C& c) { return fmt::format("{}", fmt::join(c.trainer.lora_targets, ",")); },
                     [](C& c, const std::string& v) {
                         c.trainer.lora_targets.clear();
                         if (!v.empty()) c.trainer.lora_targets = split_list(v, ',');
                     }});
        // [trainer]
        f.push_back(number<double>("trainer", "lr", [](auto& c) -> auto& { return c.trainer.lr; }));
        f.push_back(number<double>("trainer", "weight_decay", [](auto& c) -> auto& { return c.trainer.weight_decay; }));
        f.push_back(number<std::size_t>("trainer", "batch_size", [](auto& c) -> auto& { return c.trainer.batch_size; }));
        f.push_back(number<std::size_t>("trainer", "epochs", [](auto& c) -> auto& { return c.trainer.epochs; }));
        f.push_back(number<std::size_t>("trainer", "patience", [](auto& c) -> auto& { return c.trainer.patience; }));
        f.push_back({"trainer", "seeds", [](const C& c) { return join_numbers(c.trainer.seeds); },
                     [](C& c, const std::string& v) { c.trainer.seeds = parse_number_list<std::uint64_t>("trainer.seeds", v); }});
        f.push_back(text("trainer", "prompt", [](auto& c) -> auto& { return c.trainer.prompt; }));
        f.push_back({"trainer", "mode", [](const C& c) { return std::string(train::to_string(c.trainer.mode)); },
                     [](C& c, const std::string& v) { c.trainer.mode = train::parse_baseline(v); }});
        // [ablation]
        f.push_back({"ablation", "ranks", [](const C& c) { return join_numbers(c.ablation.ranks); },
                     [](C& c, const std::string& v) { c.ablation.ranks = parse_number_list<std::size_t>("ablation.ranks", v); }});
        f.push_back({"ablation", "prompts", [](const C& c) { return fmt::format("{}", fmt::join(c.ablation.prompts, " | ")); },
                     [](C& c, const std::string& v) { c.ablation.prompts = split_list(v, '|'); }});
        // [output]
        f.push_back({"output", "dir", [](const C& c) { return c.output_dir.string(); },
                     [](C& c, const std::string& v) { c.output_dir = v; }});
        return f;
    }();
    return table;
}

}  // namespace

sage::SageConfig ExperimentConfig::sage_config(std::size_t input_dim, std::size_t num_classes) const {
    sage::SageConfig s;
    s.input_dim = input_dim;
    s.hidden = sage.hidden;
    s.classifier_width = sage.classifier_width;
    s.num_classes = num_classes;
    s.seed = sage.seed;
    return s;
}

void ExperimentConfig::validate() const {
    try {
        if (dataset.nodes.empty() != dataset.edges.empty()) {
            throw ConfigError("dataset.nodes and dataset.edges must be set together");
        }
        if (dataset.nodes.empty()) dataset.generator.validate();
        if (dataset.splits.empty()) dataset.split.validate();
        backbone.validate();
        trainer.validate(backbone);
        if (trainer.seeds.empty()) throw ConfigError("trainer.seeds must list at least one seed");
        if (sage.hidden == 0 || sage.classifier_width == 0) {
            throw ConfigError("sage.hidden and sage.classifier_width must be positive");
        }
        if (!(sage.schedule.lr > 0.0) || !(sage.schedule.weight_decay >= 0.0)) {
            throw ConfigError("sage.lr must be positive and sage.weight_decay non-negative");
        }
        if (trainer.placement && (trainer.placement->pass1_layers.empty() || trainer.placement->pass2_layers.empty())) {
            throw ConfigError("fusion.pass1_layers and fusion.pass2_layers must be set together");
        }
        if (std::any_of(ablation.ranks.begin(), ablation.ranks.end(), [](std::size_t r) { return r == 0; })) {
            throw ConfigError("ablation.ranks must be positive");
        }
        if (ablation.ranks.empty() || ablation.prompts.empty()) {
            throw ConfigError("ablation.ranks and ablation.prompts must be non-empty");
        }
        if (trainer.prompt.find('|') != std::string::npos) throw ConfigError("trainer.prompt must not contain '|'");
        if (output_dir.empty()) throw ConfigError("output.dir must not be empty");
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
}

ExperimentConfig parse_config(const std::string& text) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(fmt::format("config line {}: {}", e.line(), e.message()));
    }
    ExperimentConfig cfg;
    for (const auto& [section, body] : tree) {
        if (!body.data().empty()) throw ConfigError(fmt::format("config: key '{}' outside any section", section));
        const auto& table = fields();
        if (std::none_of(table.begin(), table.end(), [&](const Field& f) { return f.section == section; })) {
            throw ConfigError(fmt::format("config: unknown section [{}]", section));
        }
        for (const auto& [key, value] : body) {
            const auto it = std::find_if(table.begin(), table.end(),
                                         [&](const Field& f) { return f.section == section && f.key == key; });
            if (it == table.end()) throw ConfigError(fmt::format("config: unknown key {}.{}", section, key));
            try {
                it->set(cfg, trim(value.data()));
            } catch (const ConfigError&) {
                throw;
            } catch (const std::exception& e) {
                throw ConfigError(fmt::format("{}.{}: {}", section, key, e.what()));
            }
        }
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str());
}

std::string serialize_config(const ExperimentConfig& config) {
    std::string out;
    std::string section;
    for (const auto& f : fields()) {
        if (f.section != section) {
            if (!section.empty()) out += '\n';
            section = f.section;
            out += "[" + section + "]\n";
        }
        out += f.key + " = " + f.get(config) + "\n";
    }
    return out;
}

}  // namespace galora::cli
