#include "carbonsched/policy.hpp"

#include <algorithm>
#include <cmath>

#include "carbonsched/config.hpp"
#include "carbonsched/csv.hpp"

namespace carbonsched {

std::string validate(const VmRequest& vm) {
    if (vm.id.empty()) return "vm id must be non-empty";
    if (vm.duration < 1) return "vm " + vm.id + ": duration must be >= 1 slot";
    if (vm.min_cpu < 1) return "vm " + vm.id + ": min_cpu must be >= 1";
    if (!(vm.min_ram_gb > 0)) return "vm " + vm.id + ": min_ram must be > 0";
    if (!(vm.max_latency_ms > 0)) return "vm " + vm.id + ": max latency must be > 0";
    if (vm.arrival < 0) return "vm " + vm.id + ": arrival slot must be >= 0";
    return {};
}

void LatencyTable::set(const RegionId& origin, const RegionId& target, double latency_ms) {
    if (!std::isfinite(latency_ms) || latency_ms < 0)
        throw PolicyDataError("latency " + origin.code() + " -> " + target.code() + " must be finite and >= 0");
    entries_[{origin, target}] = latency_ms;
}

std::optional<double> LatencyTable::get(const RegionId& origin, const RegionId& target) const {
    auto it = entries_.find({origin, target});
    if (it != entries_.end()) return it->second;
    if (origin == target) return 0.0;
    return std::nullopt;
}

LatencyTable LatencyTable::read_csv(const std::filesystem::path& path) {
    try {
        return parse_csv(read_file(path), path.string());
    } catch (const DataError& e) {
        throw PolicyDataError(e.what());
    }
}

LatencyTable LatencyTable::parse_csv(std::string_view text, const std::string& source) {
    try {
        const CsvTable t = CsvTable::parse(text, source);
        const auto co = t.column("origin"), ct = t.column("target"), cl = t.column("latency_ms");
        LatencyTable table;
        for (const CsvRow& row : t.rows()) {
            const auto ms = parse_double(row.fields[cl]);
            if (!ms) throw DataError(source, row.line, "non-numeric latency_ms");
            try {
                table.set(RegionId(row.fields[co]), RegionId(row.fields[ct]), *ms);
            } catch (const std::exception& e) {
                throw DataError(source, row.line, e.what());
            }
        }
        return table;
    } catch (const DataError& e) {
        throw PolicyDataError(e.what());
    }
}

void RegionMetadata::add(const RegionId& region, std::set<std::string> tags) { tags_[region] = std::move(tags); }

bool RegionMetadata::has_tag(const RegionId& region, const std::string& tag) const {
    auto it = tags_.find(region);
    return it != tags_.end() && it->second.count(tag) != 0;
}

bool RegionMetadata::tag_exists(const std::string& tag) const {
    return std::any_of(tags_.begin(), tags_.end(), [&](const auto& kv) { return kv.second.count(tag) != 0; });
}

RegionMetadata RegionMetadata::read_csv(const std::filesystem::path& path) {
    try {
        return parse_csv(read_file(path), path.string());
    } catch (const DataError& e) {
        throw PolicyDataError(e.what());
    }
}

RegionMetadata RegionMetadata::parse_csv(std::string_view text, const std::string& source) {
    try {
        const CsvTable t = CsvTable::parse(text, source);
        const auto cr = t.column("region"), ctags = t.column("tags");
        RegionMetadata meta;
        for (const CsvRow& row : t.rows()) {
            if (row.fields[cr].empty()) throw DataError(source, row.line, "empty region");
            std::set<std::string> tags;
            std::string_view rest = row.fields[ctags];
            while (!rest.empty()) {
                const auto semi = rest.find(';');
                std::string tag(rest.substr(0, semi));
                tag.erase(0, tag.find_first_not_of(' '));
                tag.erase(tag.find_last_not_of(' ') + 1);
                if (!tag.empty()) tags.insert(tag);
                rest = semi == std::string_view::npos ? std::string_view{} : rest.substr(semi + 1);
            }
            meta.add(RegionId(row.fields[cr]), std::move(tags));
        }
        return meta;
    } catch (const DataError& e) {
        throw PolicyDataError(e.what());
    }
}

std::vector<RegionId> PolicySpec::region_pool(const std::vector<RegionId>& all) const {
    return allowed_regions ? *allowed_regions : all;
}

PolicySpec read_policy_file(const std::filesystem::path& path) {
    try {
        return parse_policy(read_file(path), path.string());
    } catch (const DataError& e) {
        throw PolicyDataError(e.what());
    }
}

PolicySpec parse_policy(std::string_view text, const std::string& source) {
    ConfigDocument doc = [&] {
        try {
            return ConfigDocument::parse(text, source);
        } catch (const DataError& e) {
            throw PolicyDataError(e.what());
        }
    }();
    PolicySpec p;
    std::vector<std::string> errors;
    for (const auto& [key, value] : doc.entries()) {
        const std::string where = source + ":" + std::to_string(value.line) + ": ";
        if (key == "name") {
            if (value.is_list || !value.items[0].is_string())
                errors.push_back(where + "name must be a string");
            else
                p.name = std::get<std::string>(value.items[0].value);
        } else if (key == "allowed_regions") {
            std::vector<RegionId> regions;
            for (const auto& item : value.items) {
                if (!item.is_string() || std::get<std::string>(item.value).empty()) {
                    errors.push_back(where + "allowed_regions must list non-empty strings");
                    break;
                }
                regions.emplace_back(std::get<std::string>(item.value));
            }
            p.allowed_regions = std::move(regions);
        } else if (key == "max_latency_ms") {
            if (value.is_list || !value.items[0].is_number() || !(std::get<double>(value.items[0].value) >= 0))
                errors.push_back(where + "max_latency_ms must be a non-negative number");
            else
                p.max_latency_ms = std::get<double>(value.items[0].value);
        } else if (key == "require_tag") {
            if (value.is_list || !value.items[0].is_string())
                errors.push_back(where + "require_tag must be a string");
            else
                p.require_tag = std::get<std::string>(value.items[0].value);
        } else {
            errors.push_back(where + "unknown policy field '" + key + "'");
        }
    }
    if (p.name.empty()) errors.push_back(source + ": policy needs a name");
    if (!p.has_constraint()) errors.push_back(source + ": policy needs at least one constraint");
    if (!errors.empty()) {
        std::string msg;
        for (const auto& e : errors) msg += (msg.empty() ? "" : "\n") + e;
        throw PolicyDataError(msg);
    }
    return p;
}

std::vector<std::string> validate_policy(const PolicySpec& policy, const std::vector<RegionId>& all_regions,
                                         const RegionMetadata* metadata) {
    std::vector<std::string> errors;
    if (!policy.has_constraint()) errors.push_back("policy '" + policy.name + "' has no constraint");
    if (policy.allowed_regions) {
        if (policy.allowed_regions->empty()) errors.push_back("policy '" + policy.name + "' allows no region");
        for (const auto& r : *policy.allowed_regions)
            if (std::find(all_regions.begin(), all_regions.end(), r) == all_regions.end())
                errors.push_back("policy '" + policy.name + "' references unknown region " + r.code());
    }
    if (policy.require_tag) {
        if (!metadata)
            errors.push_back("policy '" + policy.name + "' requires tag '" + *policy.require_tag +
                             "' but no region metadata is loaded");
        else if (!metadata->tag_exists(*policy.require_tag))
            errors.push_back("policy '" + policy.name + "' references unknown tag '" + *policy.require_tag + "'");
    }
    return errors;
}

std::vector<RegionId> eligible_regions(const VmRequest& vm, const std::vector<RegionId>& all_regions,
                                       const PolicySpec& policy, const LatencyTable& latency,
                                       const RegionMetadata* metadata) {
    const double ceiling = std::min(vm.max_latency_ms, policy.max_latency_ms.value_or(vm.max_latency_ms));
    const bool latency_applies = std::isfinite(ceiling);
    if (latency_applies && !vm.origin)
        throw PolicyDataError("vm " + vm.id + ": latency constraint needs a request origin");
    if (policy.require_tag && !metadata)
        throw PolicyDataError("policy '" + policy.name + "' requires region metadata");

    std::vector<RegionId> out;
    for (const RegionId& r : all_regions) {
        if (policy.allowed_regions &&
            std::find(policy.allowed_regions->begin(), policy.allowed_regions->end(), r) ==
                policy.allowed_regions->end())
            continue;
        if (policy.require_tag && !metadata->has_tag(r, *policy.require_tag)) continue;
        if (latency_applies) {
            const auto ms = latency.get(*vm.origin, r);
            if (!ms)
                throw PolicyDataError("missing latency entry " + vm.origin->code() + " -> " + r.code());
            if (*ms > ceiling) continue;
        }
        out.push_back(r);
    }
    if (out.empty())
        throw NoEligibleRegionError("vm " + vm.id + ": no eligible region under policy '" + policy.name + "'");
    return out;
}

}  // namespace carbonsched
