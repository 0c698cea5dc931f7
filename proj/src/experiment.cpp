#include "carbonsched/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <cmath>
#include <cstdio>
#include <set>
#include <thread>

#include <json.hpp>

#include "carbonsched/csv.hpp"
#include "carbonsched/rng.hpp"

namespace carbonsched {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string join_lines(const std::vector<std::string>& v) {
    std::string s;
    for (const auto& x : v) s += (s.empty() ? "" : "\n") + x;
    return s;
}

std::string m_label(int m) { return m == kUnlimited ? "inf" : std::to_string(m); }

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error(join_lines(problems)), problems_(std::move(problems)) {}

const char* to_string(RunMode m) {
    switch (m) {
        case RunMode::ideal: return "ideal";
        case RunMode::forecast: return "forecast";
        case RunMode::round_robin: return "round_robin";
    }
    return "?";
}

std::shared_ptr<const HistoricalView> Dataset::historical_view() const {
    std::vector<std::shared_ptr<const CarbonIntensitySeries>> list;
    for (const auto& r : regions) list.push_back(series.at(r));
    return std::make_shared<HistoricalView>(epoch, std::move(list));
}

Dataset load_dataset(const fs::path& dir) {
    const fs::path index = dir / "index.csv";
    if (!fs::exists(index)) throw DataError(index.string(), 0, "dataset index not found (run `ingest` first)");
    const CsvTable t = CsvTable::read(index);
    const auto cr = t.column("region"), cf = t.column("file");

    Dataset ds;
    std::vector<CarbonIntensitySeries> raw;
    for (const CsvRow& row : t.rows()) {
        RegionId region(row.fields[cr]);
        if (std::find(ds.regions.begin(), ds.regions.end(), region) != ds.regions.end())
            throw DataError(index.string(), row.line, "duplicate region " + region.code());
        ds.regions.push_back(region);
        raw.push_back(ingest_carbon_csv(dir / row.fields[cf], region));
    }
    if (raw.empty()) throw DataError(index.string(), 0, "dataset lists no regions");
    ds.epoch = raw.front().start();
    for (const auto& s : raw) ds.epoch = std::max(ds.epoch, s.start());
    for (auto& s : raw) {
        const SlotIndex off = to_slot(s.start(), ds.epoch);
        if (static_cast<std::size_t>(off) >= s.size())
            throw DataError(index.string(), 0, "series for " + s.region().code() + " ends before the common epoch");
        auto values = slice(s, off, s.size() - static_cast<std::size_t>(off));
        ds.series[s.region()] = std::make_shared<CarbonIntensitySeries>(s.region(), ds.epoch, std::move(values));
    }
    if (fs::exists(dir / "latency.csv")) ds.latency = LatencyTable::read_csv(dir / "latency.csv");
    if (fs::exists(dir / "regions.csv")) ds.metadata = RegionMetadata::read_csv(dir / "regions.csv");
    return ds;
}

void write_dataset_index(const fs::path& dir, const std::vector<CarbonIntensitySeries>& series) {
    std::map<std::string, std::string> rows;
    const fs::path index = dir / "index.csv";
    if (fs::exists(index)) {
        const CsvTable t = CsvTable::read(index);
        const auto cr = t.column("region"), cf = t.column("file"), cs = t.column("start"), cl = t.column("length");
        for (const CsvRow& row : t.rows())
            rows[row.fields[cr]] = csv_escape(row.fields[cr]) + "," + csv_escape(row.fields[cf]) + "," +
                                   row.fields[cs] + "," + row.fields[cl];
    }
    for (const auto& s : series)
        rows[s.region().code()] = csv_escape(s.region().code()) + "," + csv_escape(s.region().code() + ".csv") + "," +
                                  format_iso8601(s.start()) + "," + std::to_string(s.size());
    std::string out = "region,file,start,length\n";
    for (const auto& [_, line] : rows) out += line + "\n";
    write_file(index, out);
}

Dataset synthetic_dataset(const SyntheticCarbonOptions& o) {
    Rng rng(Rng::derive(o.seed, 0x5EED));
    std::vector<std::size_t> rank(o.regions);
    for (std::size_t i = 0; i < o.regions; ++i) rank[i] = i;
    for (std::size_t i = o.regions; i > 1; --i) std::swap(rank[i - 1], rank[rng.below(i)]);

    Dataset ds;
    ds.epoch = o.epoch;
    RegionMetadata meta;
    for (std::size_t i = 0; i < o.regions; ++i) {
        char code[32];
        std::snprintf(code, sizeof code, "SYN-%02zu", i);
        RegionId region(code);
        const double mean = 100.0 + 55.0 * static_cast<double>(rank[i]);
        const double swing = 10.0 + 4.0 * static_cast<double>(i % 3);
        const double phase = 3.0 * static_cast<double>(i);
        std::vector<double> values(o.length);
        for (std::size_t t = 0; t < o.length; ++t) {
            const double noise = std::clamp(rng.normal(), -3.0, 3.0) * o.noise_sd;
            values[t] = mean + swing * std::sin(6.283185307179586 * (static_cast<double>(t) + phase) / 24.0) + noise;
        }
        ds.regions.push_back(region);
        ds.series[region] = std::make_shared<CarbonIntensitySeries>(region, o.epoch, std::move(values));
        std::set<std::string> tags{"synthetic"};
        if (i % 2 == 0) tags.insert("eu");
        meta.add(region, std::move(tags));
    }
    for (std::size_t i = 0; i < o.regions; ++i)
        for (std::size_t j = 0; j < o.regions; ++j)
            ds.latency.set(ds.regions[i], ds.regions[j],
                           i == j ? 0.0 : 10.0 + 20.0 * std::abs(static_cast<double>(i) - static_cast<double>(j)));
    ds.metadata = std::move(meta);
    return ds;
}

ForecastMethod parse_forecast_method(const std::string& tag, std::shared_ptr<const CarbonIntensitySeries> actuals) {
    const auto slash = tag.find('/');
    const std::string kind = tag.substr(0, slash);
    std::optional<long long> arg;
    if (slash != std::string::npos) {
        arg = parse_int(tag.substr(slash + 1));
        if (!arg || *arg < 1) throw std::invalid_argument("bad forecast method parameter in '" + tag + "'");
    }
    if (kind == "persistence") return method::Persistence{};
    if (kind == "seasonal_naive" || kind == "seasonal-naive")
        return method::SeasonalNaive{static_cast<std::size_t>(arg.value_or(24))};
    if (kind == "moving_average" || kind == "moving-average")
        return method::MovingAverage{static_cast<std::size_t>(arg.value_or(24))};
    if (kind == "perfect") return method::Perfect{std::move(actuals)};
    throw std::invalid_argument("unknown forecast method '" + tag + "'");
}

// ---------------------------------------------------------------------------
// Configuration

namespace {

struct Reader {
    const ConfigDocument& doc;
    std::vector<std::string>& errors;

    std::string where(const ConfigValue& v) const { return doc.source() + ":" + std::to_string(v.line) + ": "; }

    std::optional<std::string> string(const std::string& key) {
        const ConfigValue* v = doc.find(key);
        if (!v) return std::nullopt;
        if (v->is_list || !v->items[0].is_string()) {
            errors.push_back(where(*v) + key + " must be a string");
            return std::nullopt;
        }
        return std::get<std::string>(v->items[0].value);
    }

    std::optional<bool> boolean(const std::string& key) {
        const ConfigValue* v = doc.find(key);
        if (!v) return std::nullopt;
        if (v->is_list || !v->items[0].is_bool()) {
            errors.push_back(where(*v) + key + " must be true or false");
            return std::nullopt;
        }
        return std::get<bool>(v->items[0].value);
    }

    std::optional<double> number(const std::string& key, double min) {
        const ConfigValue* v = doc.find(key);
        if (!v) return std::nullopt;
        if (v->is_list || !v->items[0].is_number() || !(std::get<double>(v->items[0].value) >= min) ||
            !std::isfinite(std::get<double>(v->items[0].value))) {
            errors.push_back(where(*v) + key + " must be a number >= " + format_double(min));
            return std::nullopt;
        }
        return std::get<double>(v->items[0].value);
    }

    std::optional<std::size_t> count(const std::string& key, std::size_t min) {
        auto d = number(key, static_cast<double>(min));
        if (!d) return std::nullopt;
        if (std::floor(*d) != *d) {
            errors.push_back(where(*doc.find(key)) + key + " must be an integer");
            return std::nullopt;
        }
        return static_cast<std::size_t>(*d);
    }

    std::vector<ConfigScalar> list(const std::string& key) {
        const ConfigValue* v = doc.find(key);
        return v ? v->items : std::vector<ConfigScalar>{};
    }
};

fs::path resolve(const fs::path& p, const fs::path& base) { return p.is_absolute() ? p : base / p; }

}  // namespace

ExperimentConfig parse_experiment_config(const ConfigDocument& doc, const fs::path& config_dir,
                                         const std::optional<fs::path>& data_root) {
    static const std::set<std::string> known{
        "name",          "policy_file",          "regions_dir",        "synthetic_regions",  "traces",
        "forecasts",     "power_model",          "forecast_method",    "context_length",     "horizon",
        "m_per_region",  "deadline_margin_hours", "mode",              "seed",               "batches",
        "batch_size",    "count_idle",           "hosts_per_region",   "min_lifetime_hours", "max_lifetime_hours",
        "arrival_window_hours", "jobs",          "keep_decisions"};
    std::vector<std::string> errors;
    for (const auto& [key, value] : doc.entries())
        if (!known.count(key))
            errors.push_back(doc.source() + ":" + std::to_string(value.line) + ": unknown field '" + key + "'");

    Reader r{doc, errors};
    ExperimentConfig c;
    const fs::path data_base = data_root.value_or(config_dir);

    if (auto v = r.string("name")) c.name = *v;
    if (const ConfigValue* v = doc.find("policy_file")) {
        for (const auto& item : v->items) {
            if (!item.is_string()) {
                errors.push_back(r.where(*v) + "policy_file entries must be strings");
                continue;
            }
            c.policy_files.push_back(resolve(std::get<std::string>(item.value), config_dir));
        }
    }
    if (c.policy_files.empty()) errors.push_back(doc.source() + ": policy_file is required");
    if (auto v = r.string("regions_dir")) c.regions_dir = resolve(*v, data_base);
    if (auto v = r.count("synthetic_regions", 1)) c.synthetic_regions = *v;
    if (auto v = r.string("traces")) c.traces = resolve(*v, data_base);
    if (auto v = r.string("forecasts")) c.forecasts = resolve(*v, data_base);
    if (auto v = r.string("power_model")) c.power_model = resolve(*v, config_dir);
    if (auto v = r.string("forecast_method")) {
        try {
            parse_forecast_method(*v);
            c.forecast_method = *v;
        } catch (const std::invalid_argument& e) {
            errors.push_back(r.where(*doc.find("forecast_method")) + e.what());
        }
    }
    if (auto v = r.count("context_length", 1)) c.forecast_settings.context_length = *v;
    if (auto v = r.count("horizon", 1)) c.forecast_settings.horizon = *v;

    if (const ConfigValue* v = doc.find("m_per_region")) {
        c.m_per_region.clear();
        for (const auto& item : v->items) {
            if (item.is_string() && std::get<std::string>(item.value) == "inf") {
                c.m_per_region.push_back(kUnlimited);
            } else if (item.is_number() && std::isinf(std::get<double>(item.value))) {
                c.m_per_region.push_back(kUnlimited);
            } else if (item.is_number() && std::get<double>(item.value) >= 0 &&
                       std::floor(std::get<double>(item.value)) == std::get<double>(item.value) &&
                       std::get<double>(item.value) < kUnlimited) {
                c.m_per_region.push_back(static_cast<int>(std::get<double>(item.value)));
            } else {
                errors.push_back(r.where(*v) + "m_per_region entries must be non-negative integers or \"inf\"");
            }
        }
        if (c.m_per_region.empty()) errors.push_back(r.where(*v) + "m_per_region is empty");
    }
    if (const ConfigValue* v = doc.find("deadline_margin_hours")) {
        c.deadline_margin_hours.clear();
        for (const auto& item : v->items) {
            if (item.is_number() && std::get<double>(item.value) >= 0 &&
                std::floor(std::get<double>(item.value)) == std::get<double>(item.value) &&
                std::get<double>(item.value) < 1e6)
                c.deadline_margin_hours.push_back(static_cast<int>(std::get<double>(item.value)));
            else
                errors.push_back(r.where(*v) + "deadline_margin_hours entries must be non-negative integers");
        }
        if (c.deadline_margin_hours.empty()) errors.push_back(r.where(*v) + "deadline_margin_hours is empty");
    }
    if (const ConfigValue* v = doc.find("mode")) {
        c.modes.clear();
        for (const auto& item : v->items) {
            const std::string s = item.is_string() ? std::get<std::string>(item.value) : "";
            if (s == "ideal")
                c.modes.push_back(RunMode::ideal);
            else if (s == "forecast")
                c.modes.push_back(RunMode::forecast);
            else if (s == "round_robin")
                c.modes.push_back(RunMode::round_robin);
            else
                errors.push_back(r.where(*v) + "unknown mode '" + s + "', expected ideal, forecast or round_robin");
        }
        if (v->items.empty()) errors.push_back(r.where(*v) + "mode is empty");
    }
    if (auto v = r.count("seed", 0)) c.seed = *v;
    if (auto v = r.count("batches", 1)) c.batches = *v;
    if (auto v = r.count("batch_size", 1)) c.batch_size = *v;
    if (auto v = r.boolean("count_idle")) c.count_idle = *v;
    if (auto v = r.boolean("keep_decisions")) c.keep_decisions = *v;
    if (auto v = r.count("hosts_per_region", 1)) c.hosts_per_region = *v;
    if (auto v = r.number("min_lifetime_hours", 0)) c.min_lifetime_hours = *v;
    if (auto v = r.number("max_lifetime_hours", 0)) c.max_lifetime_hours = *v;
    if (auto v = r.count("arrival_window_hours", 1)) c.arrival_window_hours = *v;
    if (auto v = r.count("jobs", 1)) c.jobs = *v;
    if (c.max_lifetime_hours > 0 && c.max_lifetime_hours < c.min_lifetime_hours)
        errors.push_back(doc.source() + ": max_lifetime_hours is below min_lifetime_hours");
    if (!c.traces && std::ceil(std::max(c.min_lifetime_hours, 1.0)) > std::floor(c.max_lifetime_hours))
        errors.push_back(doc.source() + ": synthetic workloads need an integer lifetime in [min, max]_lifetime_hours");

    if (!errors.empty()) throw ConfigError(std::move(errors));
    return c;
}

ExperimentConfig read_experiment_config(const fs::path& path, const std::optional<fs::path>& data_root) {
    ConfigDocument doc = [&] {
        try {
            return ConfigDocument::read(path);
        } catch (const DataError& e) {
            throw ConfigError({e.what()});
        }
    }();
    return parse_experiment_config(doc, path.parent_path(), data_root);
}

namespace {

std::size_t synthetic_length(const ExperimentConfig& c) {
    const int max_margin = *std::max_element(c.deadline_margin_hours.begin(), c.deadline_margin_hours.end());
    return c.forecast_settings.context_length + c.arrival_window_hours + static_cast<std::size_t>(max_margin) +
           static_cast<std::size_t>(std::ceil(c.max_lifetime_hours)) + c.forecast_settings.horizon + 24;
}

std::vector<std::string> load_problems(const ExperimentConfig& c, ExperimentInputs* out) {
    std::vector<std::string> errors;
    std::vector<std::string> missing;
    auto need = [&](const std::optional<fs::path>& p, const char* what) {
        if (p && !fs::exists(*p)) missing.push_back(std::string(what) + ": " + p->string());
    };
    for (const auto& p : c.policy_files)
        if (!fs::exists(p)) missing.push_back("policy file: " + p.string());
    need(c.regions_dir, "regions_dir");
    if (c.regions_dir && fs::exists(*c.regions_dir) && !fs::exists(*c.regions_dir / "index.csv"))
        missing.push_back("dataset index: " + (*c.regions_dir / "index.csv").string());
    need(c.traces, "traces");
    need(c.forecasts, "forecasts");
    need(c.power_model, "power_model");
    if (!missing.empty()) {
        errors.push_back("missing required files:");
        for (auto& m : missing) errors.push_back("  " + m);
        return errors;
    }

    ExperimentInputs in;
    try {
        if (c.regions_dir) {
            in.dataset = load_dataset(*c.regions_dir);
        } else {
            SyntheticCarbonOptions so;
            so.regions = c.synthetic_regions;
            so.length = synthetic_length(c);
            so.seed = c.seed;
            in.dataset = synthetic_dataset(so);
        }
    } catch (const std::exception& e) {
        errors.push_back(std::string("dataset: ") + e.what());
        return errors;
    }

    std::vector<PolicySpec> policies;
    for (const auto& p : c.policy_files) {
        try {
            PolicySpec spec = read_policy_file(p);
            const RegionMetadata* meta = in.dataset.metadata ? &*in.dataset.metadata : nullptr;
            for (auto& e : validate_policy(spec, in.dataset.regions, meta)) errors.push_back(p.string() + ": " + e);
            if (spec.max_latency_ms && in.dataset.latency.empty())
                errors.push_back(p.string() + ": latency policy needs latency.csv in the dataset");
            policies.push_back(std::move(spec));
        } catch (const std::exception& e) {
            errors.push_back(e.what());
        }
    }

    if (c.traces) {
        try {
            TraceOptions to{in.dataset.epoch, c.min_lifetime_hours, c.max_lifetime_hours};
            auto tr = ingest_traces(*c.traces, to);
            if (tr.vms.size() < c.batch_size)
                errors.push_back("traces: " + std::to_string(tr.vms.size()) + " usable requests, fewer than batch_size " +
                                 std::to_string(c.batch_size));
            in.trace_pool = std::move(tr.vms);
        } catch (const std::exception& e) {
            errors.push_back(std::string("traces: ") + e.what());
        }
    }
    if (c.forecasts) {
        try {
            in.forecasts = std::make_shared<ForecastStore>(ForecastStore::read_csv(*c.forecasts));
        } catch (const std::exception& e) {
            errors.push_back(std::string("forecasts: ") + e.what());
        }
    } else if (std::find(c.modes.begin(), c.modes.end(), RunMode::forecast) != c.modes.end()) {
        for (const auto& r : in.dataset.regions)
            if (in.dataset.series.at(r)->size() < c.forecast_settings.context_length + 1)
                errors.push_back("forecast mode: series " + r.code() + " is shorter than context_length + 1");
    }
    if (c.power_model) {
        try {
            in.power = PowerModel::read_csv(*c.power_model);
        } catch (const std::exception& e) {
            errors.push_back(std::string("power_model: ") + e.what());
        }
    }
    if (out && errors.empty()) {
        *out = std::move(in);
    }
    return errors;
}

}  // namespace

std::vector<std::string> validate_experiment(const ExperimentConfig& config) { return load_problems(config, nullptr); }

ExperimentInputs load_inputs(const ExperimentConfig& config) {
    ExperimentInputs in;
    auto errors = load_problems(config, &in);
    if (!errors.empty()) throw ConfigError(std::move(errors));
    return in;
}

std::vector<VmRequest> sample_batch(const ExperimentConfig& c, const ExperimentInputs& in, std::size_t batch) {
    Rng rng(Rng::derive(c.seed, batch, 1));
    std::vector<VmRequest> vms;
    char prefix[32];
    std::snprintf(prefix, sizeof prefix, "b%04zu-", batch);
    if (in.trace_pool) {
        std::vector<std::size_t> idx(in.trace_pool->size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        for (std::size_t k = 0; k < c.batch_size; ++k) {
            std::swap(idx[k], idx[k + rng.below(idx.size() - k)]);
            VmRequest vm = (*in.trace_pool)[idx[k]];
            vm.id = prefix + vm.id;
            vms.push_back(std::move(vm));
        }
    } else {
        static constexpr int kCores[] = {1, 2, 4, 8};
        const auto lo = static_cast<std::int64_t>(std::ceil(std::max(c.min_lifetime_hours, 1.0)));
        const auto hi = static_cast<std::int64_t>(std::floor(c.max_lifetime_hours));
        for (std::size_t k = 0; k < c.batch_size; ++k) {
            VmRequest vm;
            char id[48];
            std::snprintf(id, sizeof id, "%svm%04zu", prefix, k);
            vm.id = id;
            vm.arrival = static_cast<SlotIndex>(c.forecast_settings.context_length + rng.below(c.arrival_window_hours));
            vm.duration = static_cast<int>(rng.between(lo, hi));
            vm.min_cpu = kCores[rng.below(4)];
            vm.min_ram_gb = 4.0 * vm.min_cpu;
            vm.deadline = vm.arrival + vm.duration;
            vms.push_back(std::move(vm));
        }
    }
    std::stable_sort(vms.begin(), vms.end(), [](const VmRequest& a, const VmRequest& b) {
        return a.arrival != b.arrival ? a.arrival < b.arrival : a.id < b.id;
    });
    return vms;
}

EmissionReport merge_reports(const std::vector<EmissionReport>& parts) {
    EmissionReport out;
    if (parts.empty()) return out;
    out.mode = parts.front().mode;
    out.policy = parts.front().policy;
    out.count_idle = parts.front().count_idle;
    bool any_slot = false;
    SlotIndex first = 0;
    for (const auto& p : parts)
        for (const auto& [_, re] : p.regions)
            if (!re.per_slot.empty()) {
                first = any_slot ? std::min(first, p.first_slot) : p.first_slot;
                any_slot = true;
            }
    out.first_slot = first;
    for (const auto& p : parts) {
        out.total_gco2 += p.total_gco2;
        out.attributed_total_gco2 += p.attributed_total_gco2;
        out.full_host_total_gco2 += p.full_host_total_gco2;
        out.scheduled += p.scheduled;
        out.unschedulable += p.unschedulable;
        out.placement_rejected += p.placement_rejected;
        for (const auto& [d, n] : p.delay_histogram) out.delay_histogram[d] += n;
        for (const auto& [id, g] : p.per_vm_gco2) out.per_vm_gco2[id] += g;
        for (const auto& [region, re] : p.regions) {
            auto& dst = out.regions[region];
            dst.attributed_gco2 += re.attributed_gco2;
            dst.full_host_gco2 += re.full_host_gco2;
            dst.jobs += re.jobs;
            const auto off = static_cast<std::size_t>(p.first_slot - first);
            if (dst.per_slot.size() < off + re.per_slot.size()) dst.per_slot.resize(off + re.per_slot.size(), 0.0);
            for (std::size_t i = 0; i < re.per_slot.size(); ++i) dst.per_slot[off + i] += re.per_slot[i];
        }
    }
    return out;
}

double ConfigurationResult::reduction_pct() const {
    if (baseline.total_gco2 == 0) return 0.0;
    return 100.0 * (1.0 - report.total_gco2 / baseline.total_gco2);
}

std::string ConfigurationResult::label() const {
    return policy + "_m" + m_label(m_per_region) + "_dl" + std::to_string(deadline_margin_hours) + "_" +
           to_string(mode);
}

namespace {

struct BatchResult {
    EmissionReport baseline;
    std::vector<ScheduleOutcome> baseline_outcomes;
    std::vector<EmissionReport> reports;                 // per mode
    std::vector<std::vector<ScheduleOutcome>> outcomes;  // per mode
};

template <class Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn fn) {
    jobs = std::max<std::size_t>(1, std::min(jobs, n));
    if (jobs == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < jobs; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

std::shared_ptr<const ForecastStore> build_forecasts(const ExperimentConfig& c, const ExperimentInputs& in) {
    auto store = std::make_shared<ForecastStore>();
    for (const auto& r : in.dataset.regions) {
        const auto& series = in.dataset.series.at(r);
        store->merge(rolling_forecast_store(*series, parse_forecast_method(c.forecast_method, series), 1,
                                            c.forecast_settings));
    }
    return store;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& c, const ExperimentInputs& in) {
    ExperimentResult result{c.name, c.seed, {}};
    std::vector<PolicySpec> policies = c.policies;
    if (policies.empty())
        for (const auto& p : c.policy_files) policies.push_back(read_policy_file(p));
    if (policies.empty()) throw ConfigError({"no policy configured"});

    const auto historical = in.dataset.historical_view();
    std::shared_ptr<const ForecastStore> forecasts = in.forecasts;
    const bool wants_forecast = std::find(c.modes.begin(), c.modes.end(), RunMode::forecast) != c.modes.end();
    if (wants_forecast && !forecasts) forecasts = build_forecasts(c, in);
    std::unique_ptr<ForecastView> forecast_view;
    if (forecasts) forecast_view = std::make_unique<ForecastView>(forecasts);

    std::vector<Datacenter> dcs;
    for (const auto& r : in.dataset.regions)
        dcs.push_back(Datacenter{r, c.hosts_per_region, HostSpec{32, 256, in.power}});
    const RegionMetadata* meta = in.dataset.metadata ? &*in.dataset.metadata : nullptr;

    std::vector<std::vector<VmRequest>> base_batches(c.batches);
    parallel_for(c.batches, c.jobs, [&](std::size_t b) { base_batches[b] = sample_batch(c, in, b); });

    for (const PolicySpec& policy : policies) {
        const auto pool = policy.region_pool(in.dataset.regions);
        for (int m : c.m_per_region) {
            for (int margin : c.deadline_margin_hours) {
                std::vector<BatchResult> batch_results(c.batches);
                parallel_for(c.batches, c.jobs, [&](std::size_t b) {
                    std::vector<VmRequest> vms = base_batches[b];
                    Rng origin_rng(Rng::derive(c.seed, b, 2));
                    std::vector<std::vector<RegionId>> eligible;
                    std::map<std::string, VmRequest> catalog;
                    for (auto& vm : vms) {
                        vm.deadline = vm.arrival + vm.duration + margin;
                        vm.origin = pool[origin_rng.below(pool.size())];
                        try {
                            eligible.push_back(eligible_regions(vm, in.dataset.regions, policy, in.dataset.latency, meta));
                        } catch (const NoEligibleRegionError&) {
                            eligible.emplace_back();
                        }
                        catalog.emplace(vm.id, vm);
                    }
                    BatchResult& br = batch_results[b];
                    {
                        AllocationMatrix alloc(in.dataset.regions, m);
                        br.baseline_outcomes = round_robin_schedule(vms, eligible, *historical, alloc, 0);
                        br.baseline = simulate(dcs, br.baseline_outcomes, catalog, *historical,
                                               {c.count_idle, to_string(RunMode::round_robin), policy.name});
                    }
                    for (RunMode mode : c.modes) {
                        if (mode == RunMode::round_robin) {
                            br.reports.push_back(br.baseline);
                            br.outcomes.push_back(br.baseline_outcomes);
                            continue;
                        }
                        const CarbonView& view = mode == RunMode::ideal ? static_cast<const CarbonView&>(*historical)
                                                                        : *forecast_view;
                        AllocationMatrix alloc(in.dataset.regions, m);
                        auto outcomes = schedule_batch(vms, eligible, view, alloc, 0);
                        br.reports.push_back(
                            simulate(dcs, outcomes, catalog, *historical, {c.count_idle, to_string(mode), policy.name}));
                        br.outcomes.push_back(std::move(outcomes));
                    }
                    if (!c.keep_decisions) {
                        br.outcomes.assign(br.outcomes.size(), {});
                        br.baseline_outcomes.clear();
                    }
                });

                std::vector<EmissionReport> baselines;
                for (auto& br : batch_results) baselines.push_back(std::move(br.baseline));
                const EmissionReport baseline = merge_reports(baselines);
                for (std::size_t k = 0; k < c.modes.size(); ++k) {
                    ConfigurationResult cr;
                    cr.policy = policy.name;
                    cr.m_per_region = m;
                    cr.deadline_margin_hours = margin;
                    cr.mode = c.modes[k];
                    std::vector<EmissionReport> parts;
                    for (auto& br : batch_results) {
                        parts.push_back(std::move(br.reports[k]));
                        if (c.keep_decisions) cr.outcomes.push_back(std::move(br.outcomes[k]));
                    }
                    cr.report = merge_reports(parts);
                    cr.baseline = baseline;
                    result.configurations.push_back(std::move(cr));
                }
            }
        }
    }
    return result;
}

ExperimentResult run_experiment(const ExperimentConfig& config) { return run_experiment(config, load_inputs(config)); }

// ---------------------------------------------------------------------------
// Output

namespace {

json m_json(int m) { return m == kUnlimited ? json("inf") : json(m); }

}  // namespace

std::string report_json(const ExperimentResult& result) {
    json root;
    root["schema_version"] = kReportSchemaVersion;
    root["experiment"] = result.name;
    root["seed"] = result.seed;
    json configs = json::array();
    for (const auto& cr : result.configurations) {
        json j;
        j["policy"] = cr.policy;
        j["m_per_region"] = m_json(cr.m_per_region);
        j["deadline_margin_hours"] = cr.deadline_margin_hours;
        j["mode"] = to_string(cr.mode);
        j["count_idle"] = cr.report.count_idle;
        j["total_gco2"] = cr.report.total_gco2;
        j["attributed_total_gco2"] = cr.report.attributed_total_gco2;
        j["full_host_total_gco2"] = cr.report.full_host_total_gco2;
        j["baseline_gco2"] = cr.baseline.total_gco2;
        j["reduction_pct"] = cr.reduction_pct();
        j["scheduled"] = cr.report.scheduled;
        j["unschedulable"] = cr.report.unschedulable;
        j["placement_rejected"] = cr.report.placement_rejected;
        j["baseline_unschedulable"] = cr.baseline.unschedulable;
        j["mean_delay"] = cr.report.mean_delay();
        json regions = json::object();
        for (const auto& [region, re] : cr.report.regions)
            regions[region.code()] = {{"gco2", cr.report.count_idle ? re.full_host_gco2 : re.attributed_gco2},
                                      {"jobs", re.jobs}};
        j["regions"] = regions;
        json base_regions = json::object();
        for (const auto& [region, re] : cr.baseline.regions)
            base_regions[region.code()] = {{"gco2", cr.baseline.count_idle ? re.full_host_gco2 : re.attributed_gco2},
                                           {"jobs", re.jobs}};
        j["baseline_regions"] = base_regions;
        json hist = json::object();
        for (const auto& [d, n] : cr.report.delay_histogram) hist[std::to_string(d)] = n;
        j["delay_histogram"] = hist;
        configs.push_back(std::move(j));
    }
    root["configurations"] = std::move(configs);
    return root.dump(2) + "\n";
}

std::string report_csv(const ExperimentResult& result) {
    std::string out =
        "policy,m_per_region,deadline_margin_hours,mode,total_gco2,baseline_gco2,reduction_pct,unschedulable,mean_delay\n";
    for (const auto& cr : result.configurations) {
        out += csv_escape(cr.policy) + "," + m_label(cr.m_per_region) + "," + std::to_string(cr.deadline_margin_hours) +
               "," + to_string(cr.mode) + "," + format_double(cr.report.total_gco2) + "," +
               format_double(cr.baseline.total_gco2) + "," + format_double(cr.reduction_pct()) + "," +
               std::to_string(cr.report.unschedulable) + "," + format_double(cr.report.mean_delay()) + "\n";
    }
    return out;
}

std::string decisions_csv(const std::vector<ScheduleOutcome>& outcomes) {
    std::string out = "vm_id,region,start_slot,duration,deadline,cost,mode,delay_slots\n";
    for (const auto& o : outcomes) {
        const auto* d = std::get_if<ScheduleDecision>(&o);
        if (!d) continue;
        out += csv_escape(d->vm_id) + "," + csv_escape(d->region.code()) + "," + std::to_string(d->start) + "," +
               std::to_string(d->duration) + "," + std::to_string(d->deadline) + "," + format_double(d->cost) + "," +
               to_string(d->mode) + "," + std::to_string(d->delay) + "\n";
    }
    return out;
}

std::string decisions_json(const std::vector<ScheduleOutcome>& outcomes) {
    json arr = json::array();
    for (const auto& o : outcomes) {
        if (const auto* d = std::get_if<ScheduleDecision>(&o)) {
            arr.push_back({{"vm_id", d->vm_id},
                           {"region", d->region.code()},
                           {"start_slot", d->start},
                           {"duration", d->duration},
                           {"deadline", d->deadline},
                           {"cost", d->cost},
                           {"mode", to_string(d->mode)},
                           {"delay_slots", d->delay},
                           {"forecast_extended", d->forecast_extended}});
        } else {
            const auto& u = std::get<Unschedulable>(o);
            arr.push_back({{"vm_id", u.vm_id}, {"unschedulable", u.summary()}});
        }
    }
    return arr.dump(2) + "\n";
}

}  // namespace carbonsched
