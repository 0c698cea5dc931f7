#pragma once

#include <limits>
#include <optional>
#include <string>

#include "carbonsched/carbon_data.hpp"

namespace carbonsched {

// A VM allocation request: resources, duration D (slots), deadline DL (slot by which
// the VM must have finished), latency ceiling, and arrival.
struct VmRequest {
    std::string id;
    int min_cpu = 1;
    double min_ram_gb = 1;
    int duration = 1;
    SlotIndex deadline = 1;
    double max_latency_ms = std::numeric_limits<double>::infinity();
    SlotIndex arrival = 0;
    std::optional<RegionId> origin;

    // Latest admissible start; below arrival means no window exists.
    SlotIndex latest_start() const { return deadline - duration; }
};

// Checks D >= 1, min_cpu >= 1, min_ram > 0, ML > 0. DL < arrival + D is legal input
// but unschedulable. Returns an empty string when valid.
std::string validate(const VmRequest& vm);

}  // namespace carbonsched
