#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace carbonsched {

inline constexpr const char* kVersion = "0.1.0";

// 64-bit FNV-1a, hex encoded. Stable across platforms.
std::string fnv1a_hex(std::string_view bytes);
std::string file_digest(const std::filesystem::path& path);

struct RunManifest {
    std::string config_hash;
    std::vector<std::pair<std::string, std::string>> inputs;  // path, digest
    std::uint64_t seed = 0;
    std::string version = kVersion;
    std::vector<std::string> outputs;

    std::string to_json() const;
};

}  // namespace carbonsched
