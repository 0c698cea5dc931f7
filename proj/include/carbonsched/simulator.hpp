#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "carbonsched/carbon_data.hpp"
#include "carbonsched/power.hpp"
#include "carbonsched/scheduler.hpp"
#include "carbonsched/vm_request.hpp"

namespace carbonsched {

class PlacementError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SimulationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct HostSpec {
    int cores = 32;
    double ram_gb = 256;
    PowerModel power = PowerModel::representative();
};

struct Datacenter {
    RegionId region;
    std::size_t hosts = 200;
    HostSpec host;
};

struct HostAssignment {
    std::string vm_id;
    std::size_t host = 0;
    SlotIndex start = 0;
    int duration = 0;
    int cores = 0;
    double ram_gb = 0;
};

struct Placements {
    RegionId region;
    std::vector<HostAssignment> placed;
    std::vector<std::string> rejected;  // fit no host over their whole lifetime
};

// First-fit decreasing by cores: each VM is pinned to the lowest-index host with room
// in every slot of its lifetime. Decisions for other regions are ignored. Throws
// PlacementError for a VM larger than one host or missing from the catalog.
Placements place_vms(const Datacenter& dc, const std::vector<ScheduleDecision>& decisions,
                     const std::map<std::string, VmRequest>& vms);

struct RegionEmissions {
    double attributed_gco2 = 0;
    double full_host_gco2 = 0;
    std::size_t jobs = 0;
    // Attributed (or full-host with count_idle) emissions per slot; index 0 is `first_slot`.
    std::vector<double> per_slot;
};

struct EmissionReport {
    std::string mode;
    std::string policy;
    SlotIndex first_slot = 0;
    bool count_idle = false;
    double total_gco2 = 0;  // full-host total with count_idle, attributed otherwise
    double attributed_total_gco2 = 0;
    double full_host_total_gco2 = 0;
    std::map<RegionId, RegionEmissions> regions;
    std::map<std::string, double> per_vm_gco2;
    std::map<SlotIndex, std::size_t> delay_histogram;
    std::size_t scheduled = 0;
    std::size_t unschedulable = 0;
    std::size_t placement_rejected = 0;

    double mean_delay() const;
};

struct SimulationOptions {
    bool count_idle = false;
    std::string mode;
    std::string policy;
};

// Emissions = sum over slots of power (kW x 1 h) x historical CI. Per VM the attributed
// power is power_at(cores / host cores) - idle; with count_idle each host carrying at
// least one VM is charged power_at(host utilization) instead.
EmissionReport simulate(const std::vector<Datacenter>& dcs, const std::vector<ScheduleOutcome>& outcomes,
                        const std::map<std::string, VmRequest>& vms, const HistoricalView& ci,
                        const SimulationOptions& options = {});

struct TraceOptions {
    UnixSeconds epoch = 0;  // slot 0
    // Raw lifetime filter in hours, inclusive. Non-positive disables a bound.
    double min_lifetime_hours = 0;
    double max_lifetime_hours = 0;
};

struct TraceIngestResult {
    std::vector<VmRequest> vms;  // deadline = arrival + duration; callers add the margin
    std::vector<std::string> rejected;
    std::size_t filtered = 0;
};

// Trace CSV columns: vm_id, created, deleted, cores, ram_gb. Output sorted by
// (arrival, id).
TraceIngestResult ingest_traces(const std::filesystem::path& path, const TraceOptions& options = {});
TraceIngestResult ingest_traces_text(std::string_view text, const std::string& source,
                                     const TraceOptions& options = {});

}  // namespace carbonsched
