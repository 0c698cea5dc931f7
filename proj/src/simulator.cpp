#include "carbonsched/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "carbonsched/csv.hpp"

namespace carbonsched {

Placements place_vms(const Datacenter& dc, const std::vector<ScheduleDecision>& decisions,
                     const std::map<std::string, VmRequest>& vms) {
    Placements out{dc.region, {}, {}};
    std::vector<HostAssignment> todo;
    SlotIndex lo = 0, hi = 0;
    for (const auto& d : decisions) {
        if (d.region != dc.region) continue;
        auto it = vms.find(d.vm_id);
        if (it == vms.end()) throw PlacementError("decision references unknown vm " + d.vm_id);
        const VmRequest& vm = it->second;
        if (vm.min_cpu > dc.host.cores || vm.min_ram_gb > dc.host.ram_gb)
            throw PlacementError("vm " + vm.id + " (" + std::to_string(vm.min_cpu) + " cores) exceeds a single host in " +
                                 dc.region.code());
        if (todo.empty()) {
            lo = d.start;
            hi = d.start + d.duration;
        }
        lo = std::min(lo, d.start);
        hi = std::max(hi, d.start + d.duration);
        todo.push_back({d.vm_id, 0, d.start, d.duration, vm.min_cpu, vm.min_ram_gb});
    }
    std::stable_sort(todo.begin(), todo.end(), [](const auto& a, const auto& b) { return a.cores > b.cores; });

    const auto span = static_cast<std::size_t>(hi - lo);
    std::vector<std::vector<int>> cores(dc.hosts);
    std::vector<std::vector<double>> ram(dc.hosts);
    for (auto& a : todo) {
        bool placed = false;
        for (std::size_t h = 0; h < dc.hosts && !placed; ++h) {
            if (cores[h].empty()) {
                cores[h].assign(span, 0);
                ram[h].assign(span, 0.0);
            }
            const auto b = static_cast<std::size_t>(a.start - lo);
            const auto e = b + static_cast<std::size_t>(a.duration);
            bool fits = true;
            for (std::size_t s = b; s < e && fits; ++s)
                fits = cores[h][s] + a.cores <= dc.host.cores && ram[h][s] + a.ram_gb <= dc.host.ram_gb;
            if (!fits) continue;
            for (std::size_t s = b; s < e; ++s) {
                cores[h][s] += a.cores;
                ram[h][s] += a.ram_gb;
            }
            a.host = h;
            placed = true;
        }
        if (placed)
            out.placed.push_back(a);
        else
            out.rejected.push_back(a.vm_id);
    }
    return out;
}

double EmissionReport::mean_delay() const {
    std::size_t n = 0;
    double sum = 0;
    for (const auto& [delay, count] : delay_histogram) {
        n += count;
        sum += static_cast<double>(delay) * static_cast<double>(count);
    }
    return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

EmissionReport simulate(const std::vector<Datacenter>& dcs, const std::vector<ScheduleOutcome>& outcomes,
                        const std::map<std::string, VmRequest>& vms, const HistoricalView& ci,
                        const SimulationOptions& options) {
    EmissionReport report;
    report.mode = options.mode;
    report.policy = options.policy;
    report.count_idle = options.count_idle;

    std::vector<ScheduleDecision> decisions;
    for (const auto& o : outcomes) {
        if (const auto* d = std::get_if<ScheduleDecision>(&o))
            decisions.push_back(*d);
        else
            ++report.unschedulable;
    }
    if (decisions.empty()) return report;

    SlotIndex lo = decisions.front().start, hi = lo;
    for (const auto& d : decisions) {
        lo = std::min(lo, d.start);
        hi = std::max(hi, d.start + d.duration);
    }
    report.first_slot = lo;
    const auto span = static_cast<std::size_t>(hi - lo);

    std::map<RegionId, const Datacenter*> by_region;
    for (const auto& dc : dcs) by_region[dc.region] = &dc;
    for (const auto& d : decisions)
        if (!by_region.count(d.region)) throw SimulationError("no datacenter configured for region " + d.region.code());

    std::map<std::string, SlotIndex> delays;
    for (const auto& d : decisions) delays[d.vm_id] = d.delay;

    for (const auto& [region, dc] : by_region) {
        const Placements placements = place_vms(*dc, decisions, vms);
        if (placements.placed.empty() && placements.rejected.empty()) continue;
        report.placement_rejected += placements.rejected.size();

        CarbonWindow truth;
        try {
            truth = ci.window(region, lo, lo, hi);
        } catch (const CostError& e) {
            throw SimulationError(std::string("historical carbon data gap: ") + e.what());
        }

        RegionEmissions& re = report.regions[region];
        re.per_slot.assign(span, 0.0);
        std::vector<double> attributed(span, 0.0);
        std::vector<std::vector<int>> host_cores(dc->hosts);

        const double idle = power_at(dc->host.power, 0.0);
        for (const auto& a : placements.placed) {
            const double kw =
                (power_at(dc->host.power, static_cast<double>(a.cores) / dc->host.cores) - idle) / 1000.0;
            double vm_total = 0;
            auto& hc = host_cores[a.host];
            if (hc.empty()) hc.assign(span, 0);
            for (SlotIndex s = a.start; s < a.start + a.duration; ++s) {
                const auto i = static_cast<std::size_t>(s - lo);
                const double g = kw * truth.values[i];
                attributed[i] += g;
                vm_total += g;
                hc[i] += a.cores;
            }
            report.per_vm_gco2[a.vm_id] = vm_total;
            ++re.jobs;
            ++report.delay_histogram[delays[a.vm_id]];
        }
        report.scheduled += re.jobs;

        std::vector<double> full(span, 0.0);
        for (const auto& hc : host_cores) {
            if (hc.empty()) continue;
            for (std::size_t i = 0; i < span; ++i)
                if (hc[i] > 0)
                    full[i] += power_at(dc->host.power, static_cast<double>(hc[i]) / dc->host.cores) / 1000.0 *
                               truth.values[i];
        }
        for (std::size_t i = 0; i < span; ++i) {
            re.attributed_gco2 += attributed[i];
            re.full_host_gco2 += full[i];
            re.per_slot[i] = options.count_idle ? full[i] : attributed[i];
        }
    }

    for (const auto& [_, re] : report.regions) {
        report.attributed_total_gco2 += re.attributed_gco2;
        report.full_host_total_gco2 += re.full_host_gco2;
    }
    report.total_gco2 = options.count_idle ? report.full_host_total_gco2 : report.attributed_total_gco2;
    return report;
}

TraceIngestResult ingest_traces(const std::filesystem::path& path, const TraceOptions& options) {
    return ingest_traces_text(read_file(path), path.string(), options);
}

TraceIngestResult ingest_traces_text(std::string_view text, const std::string& source, const TraceOptions& options) {
    const CsvTable t = CsvTable::parse(text, source);
    const auto cid = t.column("vm_id"), cc = t.column("created"), cd = t.column("deleted"), ccores = t.column("cores"),
               cram = t.column("ram_gb");
    TraceIngestResult out;
    for (const CsvRow& row : t.rows()) {
        const std::string where = source + ":" + std::to_string(row.line);
        UnixSeconds created = 0, deleted = 0;
        try {
            created = parse_iso8601(row.fields[cc]);
            deleted = parse_iso8601(row.fields[cd]);
        } catch (const std::invalid_argument& e) {
            throw DataError(source, row.line, e.what());
        }
        const auto cores = parse_int(row.fields[ccores]);
        const auto ram = parse_double(row.fields[cram]);
        if (!cores || !ram || !std::isfinite(*ram)) throw DataError(source, row.line, "non-numeric resources");
        if (deleted <= created) {
            out.rejected.push_back(where + ": deleted <= created for vm " + row.fields[cid]);
            continue;
        }
        if (*cores < 1 || !(*ram > 0)) {
            out.rejected.push_back(where + ": non-positive resources for vm " + row.fields[cid]);
            continue;
        }
        if (created < options.epoch) {
            out.rejected.push_back(where + ": created before the dataset epoch");
            continue;
        }
        const double hours = static_cast<double>(deleted - created) / static_cast<double>(kSecondsPerHour);
        if ((options.min_lifetime_hours > 0 && hours < options.min_lifetime_hours) ||
            (options.max_lifetime_hours > 0 && hours > options.max_lifetime_hours)) {
            ++out.filtered;
            continue;
        }
        VmRequest vm;
        vm.id = row.fields[cid];
        vm.min_cpu = static_cast<int>(*cores);
        vm.min_ram_gb = *ram;
        vm.duration = static_cast<int>((deleted - created + kSecondsPerHour - 1) / kSecondsPerHour);
        vm.arrival = to_slot(options.epoch, created);
        vm.deadline = vm.arrival + vm.duration;
        out.vms.push_back(std::move(vm));
    }
    std::stable_sort(out.vms.begin(), out.vms.end(), [](const VmRequest& a, const VmRequest& b) {
        return a.arrival != b.arrival ? a.arrival < b.arrival : a.id < b.id;
    });
    return out;
}

}  // namespace carbonsched
