// SPDX-FileCopyrightText: © 2026 The galora authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "galora/encoder.hpp"
#include "galora/generator.hpp"
#include "galora/sage.hpp"
#include "galora/tag_store.hpp"
#include "galora/trainer.hpp"

namespace galora::cli {

/// Invalid or unknown configuration content. Maps to exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct DatasetSection {
    /// Empty paths select the generator; nodes and edges must be set together.
    std::filesystem::path nodes;
    std::filesystem::path edges;
    std::filesystem::path splits;
    tag::GeneratorParams generator;
    tag::SplitSpec split;

    friend bool operator==(const DatasetSection&, const DatasetSection&) = default;
};

struct SageSection {
    std::size_t hidden = 64;
    std::size_t classifier_width = 64;
    std::uint64_t seed = 0;
    sage::Phase1Config schedule;

    friend bool operator==(const SageSection&, const SageSection&) = default;
};

struct AblationSection {
    std::vector<std::size_t> ranks{2, 4, 8};
    std::vector<std::string> prompts{""};

    friend bool operator==(const AblationSection&, const AblationSection&) = default;
};

/**
 * Every setting of a run. Sections: [dataset], [backbone], [sage], [fusion],
 * [trainer], [ablation], [output]. All keys have defaults, so an empty file is
 * valid. Unknown sections or keys are rejected.
 */
struct ExperimentConfig {
    DatasetSection dataset;
    enc::BackboneConfig backbone;
    SageSection sage;
    train::RunConfig trainer;
    AblationSection ablation;
    std::filesystem::path output_dir = "run";

    /// Class count: from the generator, or from the loaded dataset's labels.
    sage::SageConfig sage_config(std::size_t input_dim, std::size_t num_classes) const;
    /// Throws ConfigError on any invalid value.
    void validate() const;

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Canonical INI text with every key; parse_config(serialize_config(c)) == c.
std::string serialize_config(const ExperimentConfig& config);

}  // namespace galora::cli
