#pragma once

#include <limits>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "carbonsched/carbon_data.hpp"
#include "carbonsched/forecaster.hpp"
#include "carbonsched/vm_request.hpp"

namespace carbonsched {

// Capacity value meaning "no simultaneous-job limit".
inline constexpr int kUnlimited = std::numeric_limits<int>::max();

class CostError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class CommitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class DecisionMode { optimized, round_robin };
const char* to_string(DecisionMode m);

struct ScheduleDecision {
    std::string vm_id;
    RegionId region;
    SlotIndex start = 0;
    int duration = 1;
    SlotIndex deadline = 0;
    // Sum of the carbon view over [start, start + duration).
    double cost = 0;
    DecisionMode mode = DecisionMode::optimized;
    SlotIndex delay = 0;  // start - arrival
    // Some cost slots lay past the forecast horizon and were extended seasonally.
    bool forecast_extended = false;

    friend bool operator==(const ScheduleDecision&, const ScheduleDecision&) = default;
};

struct Unschedulable {
    std::string vm_id;
    // One entry per eligible region (or a single entry with an empty region when the
    // request never reached region evaluation).
    std::vector<std::pair<std::string, std::string>> reasons;

    std::string summary() const;
    friend bool operator==(const Unschedulable&, const Unschedulable&) = default;
};

using ScheduleOutcome = std::variant<ScheduleDecision, Unschedulable>;

// alloc[j][t]: running jobs per region and slot, bounded by the region's capacity M_j.
class AllocationMatrix {
public:
    AllocationMatrix() = default;
    explicit AllocationMatrix(std::map<RegionId, int> capacities);
    // Same capacity for every listed region.
    AllocationMatrix(const std::vector<RegionId>& regions, int capacity);

    int capacity(const RegionId& region) const;
    int count(const RegionId& region, SlotIndex slot) const;
    // True when alloc[region][tau] < M for every tau in [from, to).
    bool has_headroom(const RegionId& region, SlotIndex from, SlotIndex to) const;
    int peak(const RegionId& region) const;
    const std::map<RegionId, int>& capacities() const noexcept { return capacities_; }

private:
    friend void commit_allocation(const ScheduleDecision& decision, AllocationMatrix& alloc);

    std::map<RegionId, int> capacities_;
    std::map<RegionId, std::vector<int>> counts_;
};

// Increments alloc over [start, start + duration). Throws CommitError (leaving the
// matrix untouched) if any slot would exceed capacity.
void commit_allocation(const ScheduleDecision& decision, AllocationMatrix& alloc);

struct CarbonWindow {
    std::vector<double> values;
    bool extended = false;
};

// Carbon intensity as known to the scheduler when deciding at slot `now`.
class CarbonView {
public:
    virtual ~CarbonView() = default;
    // Values for slots [from, to). Throws CostError when the view cannot cover them.
    virtual CarbonWindow window(const RegionId& region, SlotIndex now, SlotIndex from, SlotIndex to) const = 0;
};

// Ideal mode: the historical series themselves. Slot 0 is `epoch`; every series must
// start at or before it.
class HistoricalView final : public CarbonView {
public:
    HistoricalView(UnixSeconds epoch, std::vector<std::shared_ptr<const CarbonIntensitySeries>> series);

    CarbonWindow window(const RegionId& region, SlotIndex now, SlotIndex from, SlotIndex to) const override;
    UnixSeconds epoch() const noexcept { return epoch_; }

private:
    struct Entry {
        std::shared_ptr<const CarbonIntensitySeries> series;
        SlotIndex offset = 0;
    };
    UnixSeconds epoch_;
    std::map<RegionId, Entry> series_;
};

// Realistic mode: the freshest stored forecast issued at or before `now`. Slots past
// the forecast horizon repeat its trailing day (or the whole forecast if shorter).
class ForecastView final : public CarbonView {
public:
    explicit ForecastView(std::shared_ptr<const ForecastStore> store);

    CarbonWindow window(const RegionId& region, SlotIndex now, SlotIndex from, SlotIndex to) const override;

private:
    std::shared_ptr<const ForecastStore> store_;
};

// Sum of ci[t .. t + duration). Throws CostError if the range is not covered.
double compute_cost(std::span<const double> ci, SlotIndex t, int duration);

// Start slots t in [max(now, arrival), DL - D] with headroom over [t, t + D).
std::vector<SlotIndex> feasible_windows(const VmRequest& vm, const RegionId& region, const AllocationMatrix& alloc,
                                        SlotIndex now);

// Minimum-cost (region, start) over all feasible windows. Ties: lower cost, then
// earlier start, then earlier position in `eligible`.
ScheduleOutcome schedule_vm(const VmRequest& vm, const std::vector<RegionId>& eligible, const CarbonView& view,
                            const AllocationMatrix& alloc, SlotIndex now);

// schedule_vm + commit per request, in order. `eligible[i]` belongs to `vms[i]`; an
// empty list yields Unschedulable. Each request is evaluated at max(now, arrival).
std::vector<ScheduleOutcome> schedule_batch(std::span<const VmRequest> vms,
                                            std::span<const std::vector<RegionId>> eligible, const CarbonView& view,
                                            AllocationMatrix& alloc, SlotIndex now);

// Carbon-agnostic baseline: a global cursor cycles over each request's eligible list,
// start = arrival, skipping regions without headroom. The cursor advances once per
// request.
std::vector<ScheduleOutcome> round_robin_schedule(std::span<const VmRequest> vms,
                                                  std::span<const std::vector<RegionId>> eligible,
                                                  const CarbonView& view, AllocationMatrix& alloc, SlotIndex now);

}  // namespace carbonsched
