#include "commands.hpp"

#include <algorithm>
#include <cstdlib>
#include <iostream>
#include <set>

#include <json.hpp>

#include "carbonsched/carbon_data.hpp"
#include "carbonsched/csv.hpp"
#include "carbonsched/experiment.hpp"
#include "carbonsched/forecaster.hpp"
#include "carbonsched/manifest.hpp"

namespace carbonsched::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int fail(const std::string& message) {
    std::cerr << "error: " << message << "\n";
    return kFailure;
}

int usage(const std::string& message) {
    std::cerr << "usage error: " << message << "\n";
    return kUsage;
}

int report_problems(const std::vector<std::string>& problems) {
    for (const auto& p : problems) std::cerr << p << "\n";
    return kFailure;
}

// Runs fn, turning exceptions into diagnostics and an exit code.
template <class Fn>
int guarded(Fn fn) {
    try {
        return fn();
    } catch (const ConfigError& e) {
        return report_problems(e.problems());
    } catch (const std::exception& e) {
        return fail(e.what());
    }
}

void apply_overrides(const GlobalOptions& g, ExperimentConfig& c) {
    if (g.seed) c.seed = *g.seed;
    if (g.jobs) c.jobs = *g.jobs;
}

std::string slurp_csv(const std::vector<std::vector<ScheduleOutcome>>& batches) {
    std::string out;
    for (const auto& b : batches) {
        std::string part = decisions_csv(b);
        if (!out.empty()) part.erase(0, part.find('\n') + 1);
        out += part;
    }
    if (out.empty()) out = decisions_csv({});
    return out;
}

std::string unschedulable_csv(const std::vector<std::vector<ScheduleOutcome>>& batches) {
    std::string out = "vm_id,reasons\n";
    for (const auto& b : batches)
        for (const auto& o : b)
            if (const auto* u = std::get_if<Unschedulable>(&o)) out += csv_escape(u->vm_id) + "," + csv_escape(u->summary()) + "\n";
    return out;
}

std::string delays_csv(const EmissionReport& r) {
    std::string out = "delay_slots,count\n";
    for (const auto& [d, n] : r.delay_histogram) out += std::to_string(d) + "," + std::to_string(n) + "\n";
    return out;
}

std::string regions_csv(const ExperimentResult& result) {
    std::string out = "policy,m_per_region,deadline_margin_hours,mode,scheduler,region,gco2,jobs\n";
    for (const auto& cr : result.configurations) {
        const std::string key = csv_escape(cr.policy) + "," +
                                (cr.m_per_region == kUnlimited ? std::string("inf") : std::to_string(cr.m_per_region)) +
                                "," + std::to_string(cr.deadline_margin_hours) + "," + to_string(cr.mode) + ",";
        for (const auto* rep : {&cr.report, &cr.baseline}) {
            const char* who = rep == &cr.report ? "optimized" : "baseline";
            for (const auto& [region, re] : rep->regions)
                out += key + who + "," + csv_escape(region.code()) + "," +
                       format_double(rep->count_idle ? re.full_host_gco2 : re.attributed_gco2) + "," +
                       std::to_string(re.jobs) + "\n";
        }
    }
    return out;
}

void add_input(RunManifest& m, const std::optional<fs::path>& p) {
    if (!p || !fs::exists(*p)) return;
    if (fs::is_directory(*p)) {
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(*p))
            if (e.is_regular_file()) files.push_back(e.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) m.inputs.emplace_back(f.generic_string(), file_digest(f));
    } else {
        m.inputs.emplace_back(p->generic_string(), file_digest(*p));
    }
}

std::string m_text(const json& v) { return v.is_string() ? v.get<std::string>() : std::to_string(v.get<long long>()); }

}  // namespace

std::optional<fs::path> data_root() {
    const char* env = std::getenv("CARBON_SCHED_DATA");
    if (!env || !*env) return std::nullopt;
    return fs::path(env);
}

int cmd_ingest(const GlobalOptions& g, const IngestArgs& a) {
    const auto out = g.out ? g.out : data_root();
    if (!out) return usage("ingest needs --out or CARBON_SCHED_DATA");
    return guarded([&] {
        IngestOptions opt;
        opt.timestamp_column = a.ts_col;
        opt.intensity_column = a.ci_col;
        opt.max_gap_hours = a.max_gap_hours;
        const auto series = ingest_carbon_csv(a.csv, RegionId(a.region), opt);
        write_series_csv(*out / (a.region + ".csv"), series);
        write_dataset_index(*out, {series});
        std::cout << *out / (a.region + ".csv") << ": " << series.size() << " hourly values from "
                  << format_iso8601(series.start()) << "\n";
        return kOk;
    });
}

int cmd_forecast(const GlobalOptions& g, const ForecastArgs& a) {
    const auto dataset = a.dataset ? a.dataset : data_root();
    if (!dataset) return usage("forecast needs --dataset or CARBON_SCHED_DATA");
    return guarded([&] {
        const Dataset ds = load_dataset(*dataset);
        const ForecastSettings settings{a.context, a.horizon};
        std::set<std::string> wanted(a.regions.begin(), a.regions.end());
        for (const auto& r : wanted)
            if (!ds.series.count(RegionId(r))) throw std::invalid_argument("region " + r + " is not in the dataset");
        ForecastStore store;
        for (const auto& r : ds.regions) {
            if (!wanted.empty() && !wanted.count(r.code())) continue;
            const auto& series = ds.series.at(r);
            ForecastMethod m;
            if (a.method == "persistence") m = method::Persistence{};
            else if (a.method == "seasonal-naive" || a.method == "seasonal_naive") m = method::SeasonalNaive{a.period};
            else if (a.method == "moving-average" || a.method == "moving_average") m = method::MovingAverage{a.window};
            else m = method::Perfect{series};
            store.merge(rolling_forecast_store(*series, m, a.every, settings));
        }
        const fs::path out = g.out ? *g.out : *dataset / "forecasts.csv";
        store.write_csv(out);
        std::cout << out.generic_string() << ": " << store.size() << " forecasts\n";
        return kOk;
    });
}

int cmd_validate(const GlobalOptions& g, const ValidateArgs& a) {
    if (!fs::exists(a.config)) return fail("config not found: " + a.config.string());
    return guarded([&] {
        ExperimentConfig c = read_experiment_config(a.config, data_root());
        apply_overrides(g, c);
        const auto problems = validate_experiment(c);
        if (!problems.empty()) return report_problems(problems);
        const std::size_t n = c.policy_files.size() * c.m_per_region.size() * c.deadline_margin_hours.size() *
                              c.modes.size();
        std::cout << a.config.generic_string() << ": ok, " << n << " configurations\n";
        return kOk;
    });
}

int cmd_run(const GlobalOptions& g, const RunArgs& a) {
    if (!fs::exists(a.config)) return fail("config not found: " + a.config.string());
    return guarded([&] {
        ExperimentConfig c = read_experiment_config(a.config, data_root());
        apply_overrides(g, c);
        const ExperimentResult result = run_experiment(c);
        const fs::path out = g.out ? *g.out : fs::path("results") / c.name;

        RunManifest manifest;
        manifest.seed = c.seed;
        manifest.config_hash = fnv1a_hex(read_file(a.config) + "\nseed=" + std::to_string(c.seed));
        add_input(manifest, a.config);
        for (const auto& p : c.policy_files) add_input(manifest, p);
        add_input(manifest, c.regions_dir);
        add_input(manifest, c.traces);
        add_input(manifest, c.forecasts);
        add_input(manifest, c.power_model);

        auto emit = [&](const std::string& rel, const std::string& contents) {
            write_file(out / rel, contents);
            manifest.outputs.push_back(rel);
        };
        emit("report.json", report_json(result));
        emit("report.csv", report_csv(result));
        emit("regions.csv", regions_csv(result));
        for (const auto& cr : result.configurations) {
            const std::string label = cr.label();
            if (c.keep_decisions) {
                emit("decisions/" + label + ".csv", slurp_csv(cr.outcomes));
                emit("unschedulable/" + label + ".csv", unschedulable_csv(cr.outcomes));
            }
            emit("delays/" + label + ".csv", delays_csv(cr.report));
        }
        write_file(out / "manifest.json", manifest.to_json());

        std::cout << report_csv(result);
        std::cerr << "wrote " << manifest.outputs.size() + 1 << " files to " << out.generic_string() << "\n";
        return kOk;
    });
}

int cmd_report(const GlobalOptions& g, const ReportArgs& a) {
    if (a.reports.empty()) return usage("report needs at least one report JSON");
    return guarded([&] {
        struct Row {
            std::string source, policy, m, margin, mode;
            double total = 0, baseline = 0, mean_delay = 0;
            long long unschedulable = 0;
            json config;
        };
        std::vector<Row> rows;
        std::size_t first_count = 0;
        for (std::size_t i = 0; i < a.reports.size(); ++i) {
            const auto& path = a.reports[i];
            json doc;
            try {
                doc = json::parse(read_file(path));
            } catch (const json::exception& e) {
                throw std::runtime_error(path.string() + ": not a report: " + e.what());
            }
            const int version = doc.value("schema_version", -1);
            if (version != kReportSchemaVersion)
                throw std::runtime_error(path.string() + ": schema version " + std::to_string(version) + ", expected " +
                                         std::to_string(kReportSchemaVersion));
            for (const auto& cj : doc.at("configurations")) {
                Row r;
                r.source = path.stem().string();
                r.policy = cj.at("policy").get<std::string>();
                r.m = m_text(cj.at("m_per_region"));
                r.margin = std::to_string(cj.at("deadline_margin_hours").get<int>());
                r.mode = cj.at("mode").get<std::string>();
                r.total = cj.at("total_gco2").get<double>();
                r.baseline = cj.at("baseline_gco2").get<double>();
                r.unschedulable = cj.at("unschedulable").get<long long>();
                r.mean_delay = cj.at("mean_delay").get<double>();
                r.config = cj;
                rows.push_back(std::move(r));
            }
            if (i == 0) first_count = rows.size();
        }

        const bool compare = a.reports.size() > 1;
        std::string out = "source,policy,m_per_region,deadline_margin_hours,mode,total_gco2,unschedulable,mean_delay";
        out += compare ? ",reduction_pct\n" : "\n";
        for (const auto& r : rows) {
            out += csv_escape(r.source) + "," + csv_escape(r.policy) + "," + r.m + "," + r.margin + "," + r.mode + "," +
                   format_double(r.total) + "," + std::to_string(r.unschedulable) + "," + format_double(r.mean_delay);
            if (compare) {
                // Reference: the first report's row for the same policy, M and margin.
                const Row* ref = nullptr;
                for (std::size_t k = 0; k < first_count; ++k) {
                    const Row& c = rows[k];
                    if (c.policy != r.policy || c.m != r.m || c.margin != r.margin) continue;
                    if (!ref || c.mode == "round_robin") ref = &c;
                }
                out += ",";
                if (ref && ref->total > 0) out += format_double(100.0 * (1.0 - r.total / ref->total));
            }
            out += "\n";
        }

        if (a.tables) {
            std::string regions = "source,policy,m_per_region,deadline_margin_hours,mode,scheduler,region,gco2,jobs\n";
            std::string delays = "source,policy,m_per_region,deadline_margin_hours,mode,delay_slots,count\n";
            for (const auto& r : rows) {
                const std::string key =
                    csv_escape(r.source) + "," + csv_escape(r.policy) + "," + r.m + "," + r.margin + "," + r.mode + ",";
                for (const char* field : {"regions", "baseline_regions"}) {
                    const char* who = std::string_view(field) == "regions" ? "optimized" : "baseline";
                    const json table = r.config.value(field, json::object());
                    for (const auto& [region, v] : table.items())
                        regions += key + who + "," + csv_escape(region) + "," + format_double(v.at("gco2").get<double>()) +
                                   "," + std::to_string(v.at("jobs").get<long long>()) + "\n";
                }
                std::vector<std::pair<long long, long long>> hist;
                const json histogram = r.config.value("delay_histogram", json::object());
                for (const auto& [d, n] : histogram.items())
                    hist.emplace_back(std::stoll(d), n.get<long long>());
                std::sort(hist.begin(), hist.end());
                for (const auto& [d, n] : hist) delays += key + std::to_string(d) + "," + std::to_string(n) + "\n";
            }
            write_file(*a.tables / "regions.csv", regions);
            write_file(*a.tables / "delays.csv", delays);
        }

        if (g.out) {
            write_file(*g.out, out);
        } else {
            std::cout << out;
        }
        return kOk;
    });
}

}  // namespace carbonsched::cli
