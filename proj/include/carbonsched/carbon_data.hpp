#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "carbonsched/time.hpp"

namespace carbonsched {

// Grid zone code such as "IT-NO" or "US-TEX-ERCO".
class RegionId {
public:
    RegionId() = default;
    explicit RegionId(std::string code);

    const std::string& code() const noexcept { return code_; }

    friend bool operator==(const RegionId&, const RegionId&) = default;
    friend auto operator<=>(const RegionId&, const RegionId&) = default;

private:
    std::string code_;
};

// Hours since a series or simulation epoch.
using SlotIndex = std::int64_t;

class IngestionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Hourly, gap-free gCO2eq/kWh values for one region. Immutable once built.
class CarbonIntensitySeries {
public:
    // Validates: start on an hour boundary, every value finite and >= 0.
    CarbonIntensitySeries(RegionId region, UnixSeconds start, std::vector<double> values);

    const RegionId& region() const noexcept { return region_; }
    UnixSeconds start() const noexcept { return start_; }
    std::size_t size() const noexcept { return values_.size(); }
    std::span<const double> values() const noexcept { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }

    friend bool operator==(const CarbonIntensitySeries&, const CarbonIntensitySeries&) = default;

private:
    RegionId region_;
    UnixSeconds start_;
    std::vector<double> values_;
};

struct IngestOptions {
    std::string timestamp_column = "datetime";
    std::string intensity_column = "carbon_intensity_avg";
    // Longest run of consecutive missing hours repaired by interpolation.
    int max_gap_hours = 6;
};

// Reads a provider export. Rows may arrive in any order; sub-hourly and duplicate
// rows are averaged within their hour; short gaps are linearly interpolated.
CarbonIntensitySeries ingest_carbon_csv(const std::filesystem::path& path, const RegionId& region,
                                        const IngestOptions& options = {});
CarbonIntensitySeries ingest_carbon_csv_text(std::string_view text, const std::string& source,
                                             const RegionId& region, const IngestOptions& options = {});

// Writes the normalized form (default column names), readable by ingest_carbon_csv.
std::string series_to_csv(const CarbonIntensitySeries& series);
void write_series_csv(const std::filesystem::path& path, const CarbonIntensitySeries& series);

// Throws std::out_of_range unless from + len <= series length.
std::vector<double> slice(const CarbonIntensitySeries& series, SlotIndex from, std::size_t len);

// Whole hours elapsed since epoch, floored. Throws std::out_of_range if t < epoch.
SlotIndex to_slot(UnixSeconds series_epoch, UnixSeconds t);

}  // namespace carbonsched
