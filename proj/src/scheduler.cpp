#include "carbonsched/scheduler.hpp"

#include <algorithm>

namespace carbonsched {

const char* to_string(DecisionMode m) { return m == DecisionMode::optimized ? "optimized" : "round_robin"; }

std::string Unschedulable::summary() const {
    std::string s;
    for (const auto& [region, why] : reasons) {
        if (!s.empty()) s += "; ";
        s += region.empty() ? why : region + ": " + why;
    }
    return s;
}

AllocationMatrix::AllocationMatrix(std::map<RegionId, int> capacities) : capacities_(std::move(capacities)) {
    for (const auto& [r, m] : capacities_)
        if (m < 0) throw std::invalid_argument("capacity of " + r.code() + " must be >= 0");
}

AllocationMatrix::AllocationMatrix(const std::vector<RegionId>& regions, int capacity) {
    if (capacity < 0) throw std::invalid_argument("capacity must be >= 0");
    for (const auto& r : regions) capacities_[r] = capacity;
}

int AllocationMatrix::capacity(const RegionId& region) const {
    auto it = capacities_.find(region);
    if (it == capacities_.end()) throw std::out_of_range("no capacity configured for region " + region.code());
    return it->second;
}

int AllocationMatrix::count(const RegionId& region, SlotIndex slot) const {
    auto it = counts_.find(region);
    if (it == counts_.end() || slot < 0 || static_cast<std::size_t>(slot) >= it->second.size()) return 0;
    return it->second[static_cast<std::size_t>(slot)];
}

bool AllocationMatrix::has_headroom(const RegionId& region, SlotIndex from, SlotIndex to) const {
    const int cap = capacity(region);
    if (cap == 0) return false;
    auto it = counts_.find(region);
    if (it == counts_.end()) return true;
    const auto& c = it->second;
    for (SlotIndex t = std::max<SlotIndex>(from, 0); t < to && static_cast<std::size_t>(t) < c.size(); ++t)
        if (c[static_cast<std::size_t>(t)] >= cap) return false;
    return true;
}

int AllocationMatrix::peak(const RegionId& region) const {
    auto it = counts_.find(region);
    if (it == counts_.end() || it->second.empty()) return 0;
    return *std::max_element(it->second.begin(), it->second.end());
}

void commit_allocation(const ScheduleDecision& d, AllocationMatrix& alloc) {
    if (d.start < 0 || d.duration < 1) throw CommitError("invalid decision for vm " + d.vm_id);
    if (!alloc.has_headroom(d.region, d.start, d.start + d.duration))
        throw CommitError("committing vm " + d.vm_id + " at slot " + std::to_string(d.start) + " would exceed M=" +
                          std::to_string(alloc.capacity(d.region)) + " in " + d.region.code());
    auto& c = alloc.counts_[d.region];
    const auto end = static_cast<std::size_t>(d.start + d.duration);
    if (c.size() < end) c.resize(end, 0);
    for (auto t = static_cast<std::size_t>(d.start); t < end; ++t) ++c[t];
}

HistoricalView::HistoricalView(UnixSeconds epoch, std::vector<std::shared_ptr<const CarbonIntensitySeries>> series)
    : epoch_(epoch) {
    for (auto& s : series) {
        if (!s) throw std::invalid_argument("null series");
        if (s->start() > epoch_)
            throw std::invalid_argument("series " + s->region().code() + " starts after the view epoch");
        const SlotIndex offset = to_slot(s->start(), epoch_);
        RegionId r = s->region();
        series_[r] = Entry{std::move(s), offset};
    }
}

CarbonWindow HistoricalView::window(const RegionId& region, SlotIndex, SlotIndex from, SlotIndex to) const {
    auto it = series_.find(region);
    if (it == series_.end()) throw CostError("no carbon data for region " + region.code());
    if (to < from) throw CostError("empty window");
    const auto& [series, offset] = it->second;
    try {
        return {slice(*series, from + offset, static_cast<std::size_t>(to - from)), false};
    } catch (const std::out_of_range&) {
        throw CostError("carbon data for " + region.code() + " does not cover slots [" + std::to_string(from) + ", " +
                        std::to_string(to) + ")");
    }
}

ForecastView::ForecastView(std::shared_ptr<const ForecastStore> store) : store_(std::move(store)) {
    if (!store_) throw std::invalid_argument("null forecast store");
}

CarbonWindow ForecastView::window(const RegionId& region, SlotIndex now, SlotIndex from, SlotIndex to) const {
    const Forecast* f = store_->latest_at(region, now);
    if (!f) throw CostError("no forecast for " + region.code() + " issued at or before slot " + std::to_string(now));
    if (from < f->issue_slot) throw CostError("window starts before the forecast issue slot");
    const auto h = static_cast<SlotIndex>(f->values.size());
    if (h == 0) throw CostError("empty forecast for " + region.code());
    const SlotIndex period = std::min<SlotIndex>(24, h);
    CarbonWindow w;
    w.values.reserve(static_cast<std::size_t>(std::max<SlotIndex>(0, to - from)));
    for (SlotIndex s = from; s < to; ++s) {
        const SlotIndex k = s - f->issue_slot;
        if (k < h) {
            w.values.push_back(f->values[static_cast<std::size_t>(k)]);
        } else {
            w.extended = true;
            w.values.push_back(f->values[static_cast<std::size_t>(h - period + (k - h) % period)]);
        }
    }
    return w;
}

double compute_cost(std::span<const double> ci, SlotIndex t, int duration) {
    if (t < 0 || duration < 0 || static_cast<std::size_t>(t) + static_cast<std::size_t>(duration) > ci.size())
        throw CostError("carbon view does not cover slots [" + std::to_string(t) + ", " +
                        std::to_string(t + duration) + ")");
    double sum = 0;
    for (auto i = static_cast<std::size_t>(t); i < static_cast<std::size_t>(t + duration); ++i) sum += ci[i];
    return sum;
}

std::vector<SlotIndex> feasible_windows(const VmRequest& vm, const RegionId& region, const AllocationMatrix& alloc,
                                        SlotIndex now) {
    std::vector<SlotIndex> out;
    const SlotIndex first = std::max(now, vm.arrival);
    for (SlotIndex t = first; t <= vm.latest_start(); ++t)
        if (alloc.has_headroom(region, t, t + vm.duration)) out.push_back(t);
    return out;
}

ScheduleOutcome schedule_vm(const VmRequest& vm, const std::vector<RegionId>& eligible, const CarbonView& view,
                            const AllocationMatrix& alloc, SlotIndex now) {
    Unschedulable none{vm.id, {}};
    if (auto problem = validate(vm); !problem.empty()) {
        none.reasons.emplace_back("", problem);
        return none;
    }
    if (eligible.empty()) {
        none.reasons.emplace_back("", "no eligible region");
        return none;
    }
    const SlotIndex first = std::max(now, vm.arrival);
    if (vm.latest_start() < first) {
        none.reasons.emplace_back("", "deadline " + std::to_string(vm.deadline) + " leaves no start slot from " +
                                          std::to_string(first) + " for duration " + std::to_string(vm.duration));
        return none;
    }

    std::optional<ScheduleDecision> best;
    for (const RegionId& region : eligible) {
        const auto starts = feasible_windows(vm, region, alloc, now);
        if (starts.empty()) {
            none.reasons.emplace_back(region.code(), alloc.capacity(region) == 0
                                                         ? "zero capacity"
                                                         : "capacity exhausted over every window");
            continue;
        }
        CarbonWindow w;
        try {
            w = view.window(region, first, first, vm.deadline);
        } catch (const CostError& e) {
            none.reasons.emplace_back(region.code(), e.what());
            continue;
        }
        for (SlotIndex t : starts) {
            const double cost = compute_cost(w.values, t - first, vm.duration);
            if (!best || cost < best->cost || (cost == best->cost && t < best->start)) {
                best = ScheduleDecision{vm.id,       region, t,    vm.duration,          vm.deadline,
                                        cost,        DecisionMode::optimized, t - vm.arrival, w.extended};
            }
        }
    }
    if (!best) return none;
    return *best;
}

namespace {

void check_batch(std::span<const VmRequest> vms, std::span<const std::vector<RegionId>> eligible) {
    if (vms.size() != eligible.size()) throw std::invalid_argument("one eligible-region list is needed per request");
    for (std::size_t i = 1; i < vms.size(); ++i)
        if (vms[i].arrival < vms[i - 1].arrival)
            throw std::invalid_argument("batch must be ordered by arrival (vm " + vms[i].id + ")");
}

}  // namespace

std::vector<ScheduleOutcome> schedule_batch(std::span<const VmRequest> vms,
                                            std::span<const std::vector<RegionId>> eligible, const CarbonView& view,
                                            AllocationMatrix& alloc, SlotIndex now) {
    check_batch(vms, eligible);
    std::vector<ScheduleOutcome> out;
    out.reserve(vms.size());
    for (std::size_t i = 0; i < vms.size(); ++i) {
        auto outcome = schedule_vm(vms[i], eligible[i], view, alloc, std::max(now, vms[i].arrival));
        if (auto* d = std::get_if<ScheduleDecision>(&outcome)) commit_allocation(*d, alloc);
        out.push_back(std::move(outcome));
    }
    return out;
}

std::vector<ScheduleOutcome> round_robin_schedule(std::span<const VmRequest> vms,
                                                  std::span<const std::vector<RegionId>> eligible,
                                                  const CarbonView& view, AllocationMatrix& alloc, SlotIndex now) {
    check_batch(vms, eligible);
    std::vector<ScheduleOutcome> out;
    out.reserve(vms.size());
    std::size_t cursor = 0;
    for (std::size_t i = 0; i < vms.size(); ++i) {
        const VmRequest& vm = vms[i];
        const auto& regions = eligible[i];
        Unschedulable none{vm.id, {}};
        if (auto problem = validate(vm); !problem.empty()) {
            none.reasons.emplace_back("", problem);
            out.emplace_back(std::move(none));
            continue;
        }
        if (regions.empty()) {
            none.reasons.emplace_back("", "no eligible region");
            out.emplace_back(std::move(none));
            continue;
        }
        const std::size_t first = cursor++;
        const SlotIndex start = vm.arrival;
        if (start + vm.duration > vm.deadline || start < now) {
            none.reasons.emplace_back("", "cannot start at arrival within the deadline");
            out.emplace_back(std::move(none));
            continue;
        }
        std::optional<ScheduleDecision> chosen;
        for (std::size_t k = 0; k < regions.size() && !chosen; ++k) {
            const RegionId& region = regions[(first + k) % regions.size()];
            if (!alloc.has_headroom(region, start, start + vm.duration)) {
                none.reasons.emplace_back(region.code(), "no headroom at arrival");
                continue;
            }
            try {
                const auto w = view.window(region, start, start, start + vm.duration);
                chosen = ScheduleDecision{vm.id,
                                          region,
                                          start,
                                          vm.duration,
                                          vm.deadline,
                                          compute_cost(w.values, 0, vm.duration),
                                          DecisionMode::round_robin,
                                          0,
                                          w.extended};
            } catch (const CostError& e) {
                none.reasons.emplace_back(region.code(), e.what());
            }
        }
        if (chosen) {
            commit_allocation(*chosen, alloc);
            out.emplace_back(std::move(*chosen));
        } else {
            out.emplace_back(std::move(none));
        }
    }
    return out;
}

}  // namespace carbonsched
