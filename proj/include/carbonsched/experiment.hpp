#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "carbonsched/carbon_data.hpp"
#include "carbonsched/config.hpp"
#include "carbonsched/forecaster.hpp"
#include "carbonsched/policy.hpp"
#include "carbonsched/power.hpp"
#include "carbonsched/scheduler.hpp"
#include "carbonsched/simulator.hpp"

namespace carbonsched {

// Collects every problem found in a configuration before reporting.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> problems);
    const std::vector<std::string>& problems() const noexcept { return problems_; }

private:
    std::vector<std::string> problems_;
};

enum class RunMode { ideal, forecast, round_robin };
const char* to_string(RunMode m);

// Regions in a fixed order, their series re-based on a shared epoch, and policy data.
struct Dataset {
    UnixSeconds epoch = 0;
    std::vector<RegionId> regions;
    std::map<RegionId, std::shared_ptr<const CarbonIntensitySeries>> series;
    LatencyTable latency;
    std::optional<RegionMetadata> metadata;

    std::shared_ptr<const HistoricalView> historical_view() const;
};

// Reads `index.csv` (columns region, file) from dir, plus optional latency.csv and
// regions.csv next to it. Series are trimmed to the latest common start.
Dataset load_dataset(const std::filesystem::path& dir);

// Dataset index written by `ingest`: region, file, start, length.
void write_dataset_index(const std::filesystem::path& dir, const std::vector<CarbonIntensitySeries>& series);

struct SyntheticCarbonOptions {
    std::size_t regions = 8;
    std::size_t length = 1024 + 24 * 10;
    std::uint64_t seed = 1;
    double noise_sd = 2.0;
    UnixSeconds epoch = 1651536000;  // 2022-05-03T00:00Z
};

// Regions "SYN-00".. with distinct mean levels 55 gCO2eq/kWh apart (seeded order), a
// diurnal swing of 10..18 around each mean and small clipped Gaussian noise. Region levels
// never cross, so one region is strictly the cleanest in every slot. Tags: "synthetic";
// even-indexed regions also carry "eu". Latency between i and j is 10 + 20 |i - j| ms.
Dataset synthetic_dataset(const SyntheticCarbonOptions& options);

struct ExperimentConfig {
    std::string name = "experiment";
    std::vector<std::filesystem::path> policy_files;
    std::vector<PolicySpec> policies;  // filled from policy_files when empty
    std::optional<std::filesystem::path> regions_dir;
    std::size_t synthetic_regions = 10;
    std::optional<std::filesystem::path> traces;
    std::optional<std::filesystem::path> forecasts;
    std::optional<std::filesystem::path> power_model;
    std::string forecast_method = "seasonal_naive/24";
    ForecastSettings forecast_settings;
    std::vector<int> m_per_region{kUnlimited};
    std::vector<int> deadline_margin_hours{24};
    std::vector<RunMode> modes{RunMode::ideal};
    std::uint64_t seed = 42;
    std::size_t batches = 20;
    std::size_t batch_size = 100;
    bool count_idle = false;
    std::size_t hosts_per_region = 200;
    double min_lifetime_hours = 6;
    double max_lifetime_hours = 24;
    std::size_t arrival_window_hours = 72;
    std::size_t jobs = 1;
    bool keep_decisions = true;
};

// Parses the flat key = value format. Relative policy paths resolve against the config
// file directory; dataset paths against `data_root` when given, else the config directory.
ExperimentConfig parse_experiment_config(const ConfigDocument& doc, const std::filesystem::path& config_dir,
                                         const std::optional<std::filesystem::path>& data_root);
ExperimentConfig read_experiment_config(const std::filesystem::path& path,
                                        const std::optional<std::filesystem::path>& data_root);

// Every problem with the config and the files it references, empty if runnable.
std::vector<std::string> validate_experiment(const ExperimentConfig& config);

ForecastMethod parse_forecast_method(const std::string& tag,
                                     std::shared_ptr<const CarbonIntensitySeries> actuals = nullptr);

struct ConfigurationResult {
    std::string policy;
    int m_per_region = kUnlimited;
    int deadline_margin_hours = 0;
    RunMode mode = RunMode::ideal;
    EmissionReport report;
    EmissionReport baseline;
    std::vector<std::vector<ScheduleOutcome>> outcomes;  // per batch

    double reduction_pct() const;
    std::string label() const;
};

struct ExperimentResult {
    std::string name;
    std::uint64_t seed = 0;
    std::vector<ConfigurationResult> configurations;
};

// Prepared inputs, so tests can run against in-memory datasets.
struct ExperimentInputs {
    Dataset dataset;
    std::optional<std::vector<VmRequest>> trace_pool;
    std::shared_ptr<const ForecastStore> forecasts;  // built from the method when null
    PowerModel power = PowerModel::representative();
};

ExperimentInputs load_inputs(const ExperimentConfig& config);
ExperimentResult run_experiment(const ExperimentConfig& config, const ExperimentInputs& inputs);
ExperimentResult run_experiment(const ExperimentConfig& config);

// Requests for one batch before deadline synthesis (deadline = arrival + duration).
std::vector<VmRequest> sample_batch(const ExperimentConfig& config, const ExperimentInputs& inputs,
                                    std::size_t batch_index);

// Sums batch reports; per-slot series are aligned on their first slot.
EmissionReport merge_reports(const std::vector<EmissionReport>& parts);

inline constexpr int kReportSchemaVersion = 1;

std::string report_json(const ExperimentResult& result);
// One row per configuration: policy, m_per_region, deadline_margin_hours, mode,
// total_gco2, baseline_gco2, reduction_pct, unschedulable, mean_delay.
std::string report_csv(const ExperimentResult& result);
// vm_id, region, start_slot, duration, deadline, cost, mode, delay_slots.
std::string decisions_csv(const std::vector<ScheduleOutcome>& outcomes);
std::string decisions_json(const std::vector<ScheduleOutcome>& outcomes);

}  // namespace carbonsched
