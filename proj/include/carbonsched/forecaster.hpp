#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "carbonsched/carbon_data.hpp"

namespace carbonsched {

class ForecastError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ForecastSettings {
    std::size_t context_length = 1024;
    std::size_t horizon = 96;
};

namespace method {
struct Persistence {};
struct SeasonalNaive {
    std::size_t period = 24;
};
struct MovingAverage {
    std::size_t window = 24;
};
// Returns the true future; `actuals` shares the epoch of the issue slots.
struct Perfect {
    std::shared_ptr<const CarbonIntensitySeries> actuals;
};
}  // namespace method

using ForecastMethod = std::variant<method::Persistence, method::SeasonalNaive, method::MovingAverage, method::Perfect>;

// Stable text tag: "persistence", "seasonal_naive/24", "moving_average/6", "perfect".
std::string method_tag(const ForecastMethod& m);

struct ForecastRequest {
    RegionId region;
    std::vector<double> context;  // oldest first, ending just before issue_slot
    SlotIndex issue_slot = 0;
    std::size_t horizon = 96;
};

struct Forecast {
    RegionId region;
    SlotIndex issue_slot = 0;
    std::vector<double> values;  // values[i] predicts slot issue_slot + i
    std::string method;

    SlotIndex end_slot() const { return issue_slot + static_cast<SlotIndex>(values.size()); }
    friend bool operator==(const Forecast&, const Forecast&) = default;
};

Forecast forecast(const ForecastRequest& req, const ForecastMethod& method);

struct ForecastErrors {
    double mae = 0;
    double rmse = 0;
    std::optional<double> mape_pct;  // empty when every actual is zero
    std::size_t mape_excluded = 0;
};

ForecastErrors evaluate_forecast(std::span<const double> predicted, std::span<const double> actual);
inline ForecastErrors evaluate_forecast(const Forecast& pred, std::span<const double> actual) {
    return evaluate_forecast(pred.values, actual);
}

// Rolling forecasts for every region, issued on a fixed cadence.
// Single writer; concurrent readers are safe once populated.
class ForecastStore {
public:
    void add(Forecast f);

    // Most recent forecast with issue_slot <= slot, or nullptr.
    const Forecast* latest_at(const RegionId& region, SlotIndex slot) const;

    std::size_t size() const;
    std::size_t size(const RegionId& region) const;
    const std::map<RegionId, std::vector<Forecast>>& by_region() const noexcept { return forecasts_; }

    std::string to_csv() const;
    void write_csv(const std::filesystem::path& path) const;
    static ForecastStore read_csv(const std::filesystem::path& path);
    static ForecastStore parse_csv(std::string_view text, const std::string& source);

    void merge(const ForecastStore& other);

private:
    std::map<RegionId, std::vector<Forecast>> forecasts_;
};

// Issues a forecast at every `every`-th slot from context_length onwards. Perfect-foresight
// forecasts are truncated at the end of the series.
ForecastStore rolling_forecast_store(const CarbonIntensitySeries& series, const ForecastMethod& method,
                                     std::size_t every, const ForecastSettings& settings = {});

}  // namespace carbonsched
