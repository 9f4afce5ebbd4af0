// SPDX-FileCopyrightText: © 2026 The galora authors
//
// SPDX-License-Identifier: Apache-2.0

#include "cli/manifest.hpp"

#include <array>
#include <fstream>
#include <map>
#include <memory>
#include <stdexcept>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

namespace galora::cli {

namespace {

class Sha256 {
public:
    Sha256() : ctx_(EVP_MD_CTX_new(), EVP_MD_CTX_free) {
        if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) {
            throw std::runtime_error("sha256: digest init failed");
        }
    }
    void update(const void* data, std::size_t n) {
        if (EVP_DigestUpdate(ctx_.get(), data, n) != 1) throw std::runtime_error("sha256: digest update failed");
    }
    std::string hex() {
        std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
        unsigned int len = 0;
        if (EVP_DigestFinal_ex(ctx_.get(), md.data(), &len) != 1) throw std::runtime_error("sha256: digest final failed");
        static constexpr char digits[] = "0123456789abcdef";
        std::string out;
        for (unsigned int i = 0; i < len; ++i) {
            out += digits[md[i] >> 4];
            out += digits[md[i] & 0xf];
        }
        return out;
    }

private:
    std::unique_ptr<EVP_MD_CTX, void (*)(EVP_MD_CTX*)> ctx_;
};

}  // namespace

std::string sha256_hex(std::string_view bytes) {
    Sha256 h;
    h.update(bytes.data(), bytes.size());
    return h.hex();
}

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    Sha256 h;
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    return h.hex();
}

void write_manifest(const std::filesystem::path& run_dir, const std::vector<std::filesystem::path>& inputs) {
    namespace fs = std::filesystem;
    std::map<std::string, std::string> input_hashes, config_hashes, artifact_hashes;
    for (const auto& p : inputs) input_hashes[p.generic_string()] = sha256_file(p);
    for (const auto& entry : fs::recursive_directory_iterator(run_dir)) {
        if (!entry.is_regular_file()) continue;
        const auto name = entry.path().filename().string();
        if (name == kTimingFile || name == kManifestFile) continue;
        const auto rel = fs::relative(entry.path(), run_dir).generic_string();
        (name == "config.ini" ? config_hashes : artifact_hashes)[rel] = sha256_file(entry.path());
    }
    nlohmann::ordered_json j;
    j["inputs"] = input_hashes;
    j["configs"] = config_hashes;
    j["artifacts"] = artifact_hashes;
    std::ofstream out(run_dir / kManifestFile, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (run_dir / kManifestFile).string());
    out << j.dump(2) << '\n';
}

}  // namespace galora::cli
