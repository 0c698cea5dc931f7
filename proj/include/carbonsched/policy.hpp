#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "carbonsched/carbon_data.hpp"
#include "carbonsched/vm_request.hpp"

namespace carbonsched {

// Malformed or incomplete policy inputs (latency table, metadata, policy file).
class PolicyDataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Filtering left nothing; the scheduler reports the request as unschedulable.
class NoEligibleRegionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class LatencyTable {
public:
    LatencyTable() = default;

    // Rejects negative or non-finite latencies. Diagonal entries default to 0 ms when
    // not supplied.
    void set(const RegionId& origin, const RegionId& target, double latency_ms);
    std::optional<double> get(const RegionId& origin, const RegionId& target) const;
    bool empty() const noexcept { return entries_.empty(); }

    static LatencyTable read_csv(const std::filesystem::path& path);
    static LatencyTable parse_csv(std::string_view text, const std::string& source);

private:
    std::map<std::pair<RegionId, RegionId>, double> entries_;
};

class RegionMetadata {
public:
    void add(const RegionId& region, std::set<std::string> tags);
    bool has_region(const RegionId& region) const { return tags_.count(region) != 0; }
    bool has_tag(const RegionId& region, const std::string& tag) const;
    bool tag_exists(const std::string& tag) const;

    static RegionMetadata read_csv(const std::filesystem::path& path);
    static RegionMetadata parse_csv(std::string_view text, const std::string& source);

private:
    std::map<RegionId, std::set<std::string>> tags_;
};

struct PolicySpec {
    std::string name;
    std::optional<std::vector<RegionId>> allowed_regions;
    std::optional<double> max_latency_ms;
    std::optional<std::string> require_tag;

    bool has_constraint() const { return allowed_regions || max_latency_ms || require_tag; }
    // allowed_regions if set, otherwise every region in `all`.
    std::vector<RegionId> region_pool(const std::vector<RegionId>& all) const;
};

PolicySpec read_policy_file(const std::filesystem::path& path);
PolicySpec parse_policy(std::string_view text, const std::string& source);

// Every problem found, empty when the policy is usable against this dataset.
std::vector<std::string> validate_policy(const PolicySpec& policy, const std::vector<RegionId>& all_regions,
                                         const RegionMetadata* metadata);

// Regions passing allowed_regions, the tag filter and lat[origin -> r] <= min(vm ML,
// policy ceiling), in the order of `all_regions`.
std::vector<RegionId> eligible_regions(const VmRequest& vm, const std::vector<RegionId>& all_regions,
                                       const PolicySpec& policy, const LatencyTable& latency,
                                       const RegionMetadata* metadata = nullptr);

}  // namespace carbonsched
