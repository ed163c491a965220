// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace pvf {

// FNV-1a over bytes. Used for provenance hashes of input files, not security.
std::uint64_t fnv1a64(std::string_view bytes);

// 16-char lowercase hex digest of the file's raw bytes.
std::string hash_file(const std::filesystem::path& path);

std::string hash_string(std::string_view bytes);

}  // namespace pvf
