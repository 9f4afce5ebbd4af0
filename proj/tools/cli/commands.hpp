// SPDX-FileCopyrightText: © 2026 The galora authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>

#include "cli/config.hpp"
#include "galora/ablation.hpp"
#include "galora/audit.hpp"
#include "galora/sage.hpp"
#include "galora/trainer.hpp"

namespace galora::cli {

/// Bad invocation or refused overwrite. Maps to exit code 2.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/**
 * Artifact layout below the run directory:
 *   data/      nodes.jsonl edges.tsv splits.jsonl
 *   phase1/    vocab.txt features.gtsr features.json pass1.gtsr pass2.gtsr
 *              embeddings.json metrics.json sage/<tensor>.gtsr
 *   phase2/<mode>/  report.json seed_<s>/ (adapter tensors + adapters.json)
 *   audit/     audit.json audit.txt
 *   ablate/<what>/  table.csv table.txt
 *   evaluate/  <mode>_seed<s>_<split>.json
 * Every command directory also holds the resolved config.ini, and
 * manifest.json at the top is rewritten after each command.
 */
struct RunContext {
    ExperimentConfig config;
    /// Replace an existing command directory instead of refusing.
    bool force = false;

    const std::filesystem::path& run_dir() const noexcept { return config.output_dir; }
};

void cmd_gen_data(const RunContext& ctx);
sage::Phase1Result cmd_phase1(const RunContext& ctx);
train::RunReport cmd_phase2(const RunContext& ctx);
/// Prints the component table to `out`.
fusion::ParamAudit cmd_audit(const RunContext& ctx, std::ostream& out);
/// `what` is "rank" or "prompt"; anything else throws UsageError listing both.
train::AblationTable cmd_ablate(const RunContext& ctx, std::string_view what);
/// Metric of the saved phase-2 adapters of `seed` on `split`.
double cmd_evaluate(const RunContext& ctx, std::uint64_t seed, tag::Split split);

/// Parses arguments, dispatches, and maps failures to exit codes: 0 success,
/// 1 runtime failure, 2 usage, configuration or input-data error.
int run_cli(int argc, const char* const* argv);

}  // namespace galora::cli
