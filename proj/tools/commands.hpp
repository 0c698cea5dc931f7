#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace carbonsched::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;
inline constexpr int kUsage = 2;

struct GlobalOptions {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> jobs;
    std::optional<std::filesystem::path> out;
};

// CARBON_SCHED_DATA, if set and non-empty.
std::optional<std::filesystem::path> data_root();

struct IngestArgs {
    std::string region;
    std::filesystem::path csv;
    std::string ts_col = "datetime";
    std::string ci_col = "carbon_intensity_avg";
    int max_gap_hours = 6;
};
int cmd_ingest(const GlobalOptions& g, const IngestArgs& a);

struct ForecastArgs {
    std::optional<std::filesystem::path> dataset;
    std::string method = "seasonal-naive";
    std::size_t period = 24;
    std::size_t window = 24;
    std::size_t horizon = 96;
    std::size_t every = 1;
    std::size_t context = 1024;
    std::vector<std::string> regions;
};
int cmd_forecast(const GlobalOptions& g, const ForecastArgs& a);

struct RunArgs {
    std::filesystem::path config;
};
int cmd_run(const GlobalOptions& g, const RunArgs& a);

struct ReportArgs {
    std::vector<std::filesystem::path> reports;
    std::optional<std::filesystem::path> tables;
};
int cmd_report(const GlobalOptions& g, const ReportArgs& a);

struct ValidateArgs {
    std::filesystem::path config;
};
int cmd_validate(const GlobalOptions& g, const ValidateArgs& a);

}  // namespace carbonsched::cli
