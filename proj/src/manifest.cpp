#include "carbonsched/manifest.hpp"

#include <cstdio>

#include <json.hpp>

#include "carbonsched/csv.hpp"

namespace carbonsched {

std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string file_digest(const std::filesystem::path& path) { return fnv1a_hex(read_file(path)); }

std::string RunManifest::to_json() const {
    nlohmann::json j;
    j["config_hash"] = config_hash;
    j["seed"] = seed;
    j["version"] = version;
    nlohmann::json in = nlohmann::json::array();
    for (const auto& [p, d] : inputs) in.push_back({{"path", p}, {"digest", d}});
    j["inputs"] = in;
    j["outputs"] = outputs;
    return j.dump(2) + "\n";
}

}  // namespace carbonsched
