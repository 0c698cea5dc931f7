// Acceptance suite: one PASS/FAIL/SKIP line per criterion; exit status 1 if any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <set>
#include <thread>
#include <string>

#include "brute_force_oracle.hpp"
#include "carbonsched/experiment.hpp"

using namespace carbonsched;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void verdict(int id, const char* status, const std::string& title, const std::string& detail) {
    std::printf("criterion %2d %-4s %s: %s\n", id, status, title.c_str(), detail.c_str());
    std::fflush(stdout);
    if (std::string(status) == "FAIL") ++failures;
}

void check(int id, bool ok, const std::string& title, const std::string& detail) {
    verdict(id, ok ? "PASS" : "FAIL", title, detail);
}

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

PolicySpec tag_policy(const std::string& name, const std::string& tag) {
    PolicySpec p;
    p.name = name;
    p.require_tag = tag;
    return p;
}

ExperimentInputs constant_inputs(const std::vector<std::pair<std::string, double>>& levels, std::size_t length) {
    ExperimentInputs in;
    RegionMetadata meta;
    for (const auto& [code, ci] : levels) {
        RegionId r(code);
        in.dataset.regions.push_back(r);
        in.dataset.series[r] = std::make_shared<CarbonIntensitySeries>(r, 0, std::vector<double>(length, ci));
        meta.add(r, {"synthetic"});
    }
    in.dataset.metadata = meta;
    return in;
}

ExperimentConfig synthetic_config(std::size_t regions, std::size_t batches, std::size_t batch_size) {
    ExperimentConfig c;
    c.name = "acceptance";
    c.synthetic_regions = regions;
    c.policies = {tag_policy("all", "synthetic")};
    c.batches = batches;
    c.batch_size = batch_size;
    return c;
}

std::size_t synthetic_length(const ExperimentConfig& c) {
    const int margin = *std::max_element(c.deadline_margin_hours.begin(), c.deadline_margin_hours.end());
    return c.forecast_settings.context_length + c.arrival_window_hours + static_cast<std::size_t>(margin) +
           static_cast<std::size_t>(c.max_lifetime_hours) + c.forecast_settings.horizon + 24;
}

ExperimentInputs synthetic_inputs(const ExperimentConfig& c) {
    SyntheticCarbonOptions so;
    so.regions = c.synthetic_regions;
    so.length = synthetic_length(c);
    so.seed = c.seed;
    ExperimentInputs in;
    in.dataset = synthetic_dataset(so);
    return in;
}

// Criteria 1 and 2 share the fuzz run.
void oracle_criteria() {
    const auto t0 = std::chrono::steady_clock::now();
    const std::uint64_t instances = 1500;
    std::size_t vms = 0, mismatches = 0, scheduled = 0, deadline_violations = 0, capacity_violations = 0;
    for (std::uint64_t seed = 0; seed < instances; ++seed) {
        const auto in = oracle::random_instance(1000003 * seed + 11);
        std::vector<std::shared_ptr<const CarbonIntensitySeries>> list;
        std::map<RegionId, int> caps;
        for (const auto& r : in.regions) {
            list.push_back(std::make_shared<CarbonIntensitySeries>(RegionId(r), 0, in.ci.at(r)));
            caps[RegionId(r)] = in.capacity.at(r);
        }
        const HistoricalView view(0, list);
        AllocationMatrix alloc(caps);
        oracle::Shadow shadow{in.capacity, {}};
        std::vector<ScheduleDecision> decisions;
        for (std::size_t k = 0; k < in.vms.size(); ++k) {
            const VmRequest& vm = in.vms[k];
            ++vms;
            std::vector<RegionId> eligible(in.eligible[k].begin(), in.eligible[k].end());
            const auto got = schedule_vm(vm, eligible, view, alloc, vm.arrival);
            const auto want = oracle::brute_force(vm, in.eligible[k], in.ci, shadow, vm.arrival);
            const auto* d = std::get_if<ScheduleDecision>(&got);
            if (!want || !d) {
                if (want.has_value() != (d != nullptr)) ++mismatches;
                continue;
            }
            if (d->region.code() != want->region || d->start != want->start || d->cost != want->cost) ++mismatches;
            ++scheduled;
            if (d->start + d->duration > vm.deadline || d->start < vm.arrival) ++deadline_violations;
            commit_allocation(*d, alloc);
            shadow.add(d->region.code(), d->start, d->duration);
            decisions.push_back(*d);
        }
        // Recount occupancy from the decisions alone.
        std::map<std::string, std::map<SlotIndex, int>> occupancy;
        for (const auto& d : decisions)
            for (SlotIndex t = d.start; t < d.start + d.duration; ++t) ++occupancy[d.region.code()][t];
        for (const auto& [r, slots] : occupancy)
            for (const auto& [t, n] : slots)
                if (n > in.capacity.at(r) || alloc.count(RegionId(r), t) != n) ++capacity_violations;
    }
    const double secs = seconds_since(t0);
    check(1, mismatches == 0 && secs < 60, "oracle equivalence",
          std::to_string(instances) + " instances, " + std::to_string(vms) + " requests, " +
              std::to_string(mismatches) + " mismatches, " + fmt("%.1f s", secs));
    check(2, deadline_violations == 0 && capacity_violations == 0, "constraint safety",
          std::to_string(scheduled) + " placements, " + std::to_string(deadline_violations) + " deadline and " +
              std::to_string(capacity_violations) + " capacity violations");
}

void constant_ci() {
    double worst = 0;
    std::size_t compared = 0;
    bool same_sets = true;
    for (std::uint64_t seed : {1, 2, 3}) {
        auto in = constant_inputs({{"A", 312.5}, {"B", 312.5}, {"C", 312.5}, {"D", 312.5}, {"E", 312.5}}, 1400);
        auto c = synthetic_config(5, 4, 100);
        c.seed = seed;
        c.m_per_region = {20, 50, kUnlimited};
        c.deadline_margin_hours = {6, 48};
        for (const auto& cr : run_experiment(c, in).configurations) {
            if (cr.report.scheduled != cr.baseline.scheduled || cr.report.unschedulable != 0) {
                same_sets = false;
                continue;
            }
            ++compared;
            worst = std::max(worst, std::abs(cr.report.attributed_total_gco2 - cr.baseline.attributed_total_gco2) /
                                        cr.baseline.attributed_total_gco2);
        }
    }
    check(3, same_sets && worst < 1e-6, "constant-CI null result",
          std::to_string(compared) + " configurations, worst relative difference " + fmt("%.3g", worst));
}

void two_region() {
    auto in = constant_inputs({{"HIGH", 500}, {"LOW", 100}}, 1400);
    auto c = synthetic_config(2, 10, 100);
    const auto r = run_experiment(c, in);
    const auto& cr = r.configurations.front();
    const double measured = cr.reduction_pct();
    const bool ok = std::abs(measured - 80.0) < 1e-9;
    check(4, ok, "two-region closed form",
          fmt("%.6f%% reduction vs even-split round-robin baseline, target 80%%", measured) +
              " (an even split gives 1 - 100/300 = 66.67%; 80% = (500-100)/500 holds only vs an all-in-HIGH baseline)");

    // Same workload, reference baseline with every job in the high region.
    double all_high = 0;
    for (const auto& [id, g] : cr.report.per_vm_gco2) all_high += g * 5.0;
    std::printf("             info two-region vs all-in-HIGH baseline: %.9f%%\n",
                100.0 * (1.0 - cr.report.total_gco2 / all_high));
}

void black_hole() {
    auto c = synthetic_config(8, 1, 100);
    c.m_per_region = {5, 50};
    c.deadline_margin_hours = {24};
    const auto in = synthetic_inputs(c);
    RegionId cleanest = in.dataset.regions.front();
    double best = 1e300;
    for (const auto& r : in.dataset.regions) {
        const auto v = in.dataset.series.at(r)->values();
        double sum = 0;
        for (double x : v) sum += x;
        if (sum < best) best = sum, cleanest = r;
    }
    const auto result = run_experiment(c, in);
    const auto& m5 = result.configurations[0];
    const auto& m50 = result.configurations[1];
    auto jobs_in = [](const ConfigurationResult& cr, const RegionId& r) {
        auto it = cr.report.regions.find(r);
        return it == cr.report.regions.end() ? std::size_t{0} : it->second.jobs;
    };
    std::size_t used5 = 0;
    for (const auto& [_, re] : m5.report.regions)
        if (re.jobs > 0) ++used5;
    const double share50 = static_cast<double>(jobs_in(m50, cleanest)) / static_cast<double>(m50.report.scheduled);
    const bool ok = share50 >= 0.9 && used5 >= 4 && m50.reduction_pct() > m5.reduction_pct();
    check(5, ok, "black-hole demonstration",
          "M=50 puts " + fmt("%.1f%%", 100 * share50) + " of jobs in " + cleanest.code() + ", M=5 uses " +
              std::to_string(used5) + " regions, reductions " + fmt("%.2f%%", m50.reduction_pct()) + " vs " +
              fmt("%.2f%%", m5.reduction_pct()));
}

ExperimentConfig sweep_config() {
    auto c = synthetic_config(10, 20, 100);
    c.policies = {tag_policy("all", "synthetic"), tag_policy("eu", "eu"), PolicySpec{"latency", {}, 50.0, {}}};
    c.m_per_region = {kUnlimited};
    c.deadline_margin_hours = {6, 12, 24, 48};
    c.modes = {RunMode::ideal, RunMode::forecast};
    return c;
}

void margin_monotonicity(const ExperimentResult& r) {
    std::map<std::string, std::vector<double>> totals;
    for (const auto& cr : r.configurations)
        if (cr.mode == RunMode::ideal) totals[cr.policy].push_back(cr.report.total_gco2);
    bool ok = true;
    std::string detail;
    for (const auto& [policy, t] : totals) {
        for (std::size_t i = 1; i < t.size(); ++i) ok = ok && t[i] <= t[i - 1];
        detail += (detail.empty() ? "" : "; ") + policy + " " + fmt("%.0f", t.front()) + " -> " + fmt("%.0f g", t.back());
    }
    check(6, ok && totals.size() == 3, "deadline-margin monotonicity", "margins 6/12/24/48 h: " + detail);
}

void forecast_sanity(const ExperimentConfig& sweep, const ExperimentInputs& in, const ExperimentResult& r) {
    // Perfect-foresight store: decisions must match ideal mode byte for byte, capacity binding or not.
    auto perfect = std::make_shared<ForecastStore>();
    for (const auto& reg : in.dataset.regions) {
        const auto& s = in.dataset.series.at(reg);
        perfect->merge(rolling_forecast_store(*s, method::Perfect{s}, 1, sweep.forecast_settings));
    }
    ExperimentInputs pin = in;
    pin.forecasts = perfect;
    ExperimentConfig pc = sweep;
    pc.m_per_region = {5, kUnlimited};
    const auto pr = run_experiment(pc, pin);
    std::size_t identical = 0, pairs = 0;
    for (std::size_t i = 0; i + 1 < pr.configurations.size(); i += 2) {
        const auto& ideal = pr.configurations[i];
        const auto& fc = pr.configurations[i + 1];
        for (std::size_t b = 0; b < ideal.outcomes.size(); ++b, ++pairs)
            if (decisions_csv(ideal.outcomes[b]) == decisions_csv(fc.outcomes[b]) &&
                decisions_json(ideal.outcomes[b]) == decisions_json(fc.outcomes[b]))
                ++identical;
    }

    std::size_t inside = 0, configs = 0;
    double lowest_gap = 1e300;
    for (std::size_t i = 0; i + 1 < r.configurations.size(); i += 2) {
        const double ideal = r.configurations[i].reduction_pct();
        const double fc = r.configurations[i + 1].reduction_pct();
        ++configs;
        if (fc >= 0 && fc <= ideal) ++inside;
        lowest_gap = std::min(lowest_gap, ideal - fc);
    }
    check(7, identical == pairs && pairs > 0 && inside == configs, "forecast-mode sanity",
          "perfect foresight identical on " + std::to_string(identical) + "/" + std::to_string(pairs) +
              " batches; seasonal-naive within [0, ideal] on " + std::to_string(inside) + "/" +
              std::to_string(configs) + " configurations (smallest gap " + fmt("%.3f pp)", lowest_gap));
}

void forecaster_metrics() {
    std::vector<double> v(1024 + 96);
    for (std::size_t t = 0; t < v.size(); ++t)
        v[t] = 300 + 100 * std::sin(6.283185307179586 * static_cast<double>(t % 24) / 24.0);
    const std::vector<double> ctx(v.begin(), v.begin() + 1024), truth(v.begin() + 1024, v.end());
    const RegionId r("SYN");
    const auto sn = evaluate_forecast(forecast({r, ctx, 1024, 96}, method::SeasonalNaive{24}), truth);
    const auto pe = evaluate_forecast(forecast({r, ctx, 1024, 96}, method::Persistence{}), truth);
    check(8, sn.mape_pct && *sn.mape_pct == 0.0 && pe.mape_pct && *pe.mape_pct > 0.0, "forecaster metrics",
          "seasonal-naive MAPE " + fmt("%.3g%%", sn.mape_pct.value_or(-1)) + ", persistence MAPE " +
              fmt("%.3g%%", pe.mape_pct.value_or(-1)));
}

std::optional<fs::path> data_root() {
    const char* env = std::getenv("CARBON_SCHED_DATA");
    if (!env || !*env) return std::nullopt;
    return fs::path(env);
}

const fs::path kPresets = fs::path(CARBONSCHED_SOURCE_DIR) / "presets";

void full_protocol() {
    const auto root = data_root();
    if (!root || !fs::exists(*root / "regions/index.csv") || !fs::exists(*root / "azure/vm_traces.csv")) {
        verdict(9, "SKIP", "full-protocol reproduction",
                "set CARBON_SCHED_DATA to a directory with regions/ and azure/vm_traces.csv");
        return;
    }
    auto c = read_experiment_config(kPresets / "paper_full.toml", root);
    c.m_per_region = {5, 50};
    c.jobs = std::max(1u, std::thread::hardware_concurrency());
    const auto r = run_experiment(c);
    double best = -1e300, strict_fc = 1e300, strict_ideal = 1e300;
    for (const auto& cr : r.configurations) {
        if (cr.policy == "subset" && cr.m_per_region == 50) best = std::max(best, cr.reduction_pct());
        if (cr.policy == "latency" && cr.m_per_region == 5) {
            double& slot = cr.mode == RunMode::forecast ? strict_fc : strict_ideal;
            slot = std::min(slot, cr.reduction_pct());
        }
    }
    const bool ok = std::abs(best - 79.25) <= 5 && std::abs(strict_fc - 13.46) <= 5 && std::abs(strict_ideal - 16.35) <= 5;
    check(9, ok, "full-protocol reproduction",
          fmt("subset M=50 %.2f%% (target 79.25)", best) + fmt(", latency M=5 forecast %.2f%% (13.46)", strict_fc) +
              fmt(", ideal %.2f%% (16.35)", strict_ideal));
}

void determinism() {
    std::vector<std::string> ran, skipped;
    bool ok = true;
    for (const auto& entry : fs::directory_iterator(kPresets)) {
        if (entry.path().extension() != ".toml") continue;
        const std::string name = entry.path().stem().string();
        ExperimentConfig c;
        try {
            c = read_experiment_config(entry.path(), data_root());
        } catch (const std::exception& e) {
            ok = false;
            ran.push_back(name + " (unreadable: " + e.what() + ")");
            continue;
        }
        if (!validate_experiment(c).empty() || c.batches * c.batch_size > 100000) {
            skipped.push_back(name);
            continue;
        }
        const auto a = run_experiment(c);
        c.jobs = 3;
        const auto b = run_experiment(c);
        if (report_json(a) != report_json(b) || report_csv(a) != report_csv(b)) ok = false;
        ran.push_back(name);
    }
    std::sort(ran.begin(), ran.end());
    std::sort(skipped.begin(), skipped.end());
    std::string detail = "identical reports for";
    for (const auto& n : ran) detail += " " + n;
    if (!skipped.empty()) {
        detail += "; needs external data:";
        for (const auto& n : skipped) detail += " " + n;
    }
    check(10, ok && !ran.empty(), "determinism", detail);
}

}  // namespace

int main() {
    oracle_criteria();
    constant_ci();
    two_region();
    black_hole();

    const auto sweep = sweep_config();
    const auto sweep_inputs = synthetic_inputs(sweep);
    const auto sweep_result = run_experiment(sweep, sweep_inputs);
    margin_monotonicity(sweep_result);
    forecast_sanity(sweep, sweep_inputs, sweep_result);

    forecaster_metrics();
    full_protocol();
    determinism();

    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
