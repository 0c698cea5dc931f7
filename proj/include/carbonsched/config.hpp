#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace carbonsched {

// Flat TOML subset used by policy and experiment files:
//   key = "string" | 12.5 | true | ["a", "b"] | [1, 2, "inf"]
// '#' starts a comment outside strings. Tables and multi-line values are not supported.
struct ConfigScalar {
    std::variant<std::string, double, bool> value;

    bool is_string() const { return std::holds_alternative<std::string>(value); }
    bool is_number() const { return std::holds_alternative<double>(value); }
    bool is_bool() const { return std::holds_alternative<bool>(value); }
};

struct ConfigValue {
    bool is_list = false;
    std::vector<ConfigScalar> items;  // exactly one item when !is_list
    std::size_t line = 0;
};

class ConfigDocument {
public:
    static ConfigDocument parse(std::string_view text, std::string source);
    static ConfigDocument read(const std::filesystem::path& path);

    const std::string& source() const noexcept { return source_; }
    const std::map<std::string, ConfigValue>& entries() const noexcept { return entries_; }
    bool has(const std::string& key) const { return entries_.count(key) != 0; }
    const ConfigValue* find(const std::string& key) const;

private:
    std::string source_;
    std::map<std::string, ConfigValue> entries_;
};

}  // namespace carbonsched
