// SPDX-FileCopyrightText: © 2026 The galora authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace galora::cli {

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Files named timing.json hold wall-clock data and never enter the manifest.
inline constexpr std::string_view kTimingFile = "timing.json";
inline constexpr std::string_view kManifestFile = "manifest.json";

/**
 * Rewrites <run_dir>/manifest.json: hashes of `inputs` (keyed as given), of
 * every command's config.ini, and of every other artifact under `run_dir`
 * (keyed by relative path, sorted).
 */
void write_manifest(const std::filesystem::path& run_dir, const std::vector<std::filesystem::path>& inputs);

}  // namespace galora::cli
