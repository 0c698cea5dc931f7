#include "carbonsched/carbon_data.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "carbonsched/csv.hpp"

namespace carbonsched {

RegionId::RegionId(std::string code) : code_(std::move(code)) {
    if (code_.empty()) throw std::invalid_argument("region id must be non-empty");
}

CarbonIntensitySeries::CarbonIntensitySeries(RegionId region, UnixSeconds start, std::vector<double> values)
    : region_(std::move(region)), start_(start), values_(std::move(values)) {
    if (floor_to_hour(start_) != start_) throw std::invalid_argument("series start must be aligned to the hour");
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!std::isfinite(values_[i]) || values_[i] < 0)
            throw std::invalid_argument("carbon intensity at slot " + std::to_string(i) +
                                        " must be finite and non-negative");
    }
}

CarbonIntensitySeries ingest_carbon_csv(const std::filesystem::path& path, const RegionId& region,
                                        const IngestOptions& options) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const DataError&) {
        throw IngestionError(path.string() + ": missing or unreadable file");
    }
    return ingest_carbon_csv_text(text, path.string(), region, options);
}

CarbonIntensitySeries ingest_carbon_csv_text(std::string_view text, const std::string& source,
                                             const RegionId& region, const IngestOptions& options) {
    CsvTable table = [&] {
        try {
            return CsvTable::parse(text, source);
        } catch (const DataError& e) {
            throw IngestionError(e.what());
        }
    }();
    const auto ts_col = table.find_column(options.timestamp_column);
    const auto ci_col = table.find_column(options.intensity_column);
    if (!ts_col) throw IngestionError(source + ": missing column '" + options.timestamp_column + "'");
    if (!ci_col) throw IngestionError(source + ": missing column '" + options.intensity_column + "'");

    // hour -> (sum, count); summation order follows the sorted input values so the
    // result does not depend on row order.
    std::map<UnixSeconds, std::vector<double>> buckets;
    for (const CsvRow& row : table.rows()) {
        const std::string where = source + ":" + std::to_string(row.line);
        UnixSeconds ts = 0;
        try {
            ts = parse_iso8601(row.fields[*ts_col]);
        } catch (const std::invalid_argument& e) {
            throw IngestionError(where + ": unparsable row: " + e.what());
        }
        const auto v = parse_double(row.fields[*ci_col]);
        if (!v || !std::isfinite(*v))
            throw IngestionError(where + ": unparsable row: non-numeric carbon intensity '" + row.fields[*ci_col] +
                                 "'");
        if (*v < 0) throw IngestionError(where + ": negative carbon intensity at " + format_iso8601(ts));
        buckets[floor_to_hour(ts)].push_back(*v);
    }
    if (buckets.empty()) throw IngestionError(source + ": no data rows");

    std::vector<std::pair<UnixSeconds, double>> hourly;
    hourly.reserve(buckets.size());
    for (auto& [hour, vals] : buckets) {
        std::sort(vals.begin(), vals.end());
        double sum = 0;
        for (double x : vals) sum += x;
        hourly.emplace_back(hour, vals.size() == 1 ? vals.front() : sum / static_cast<double>(vals.size()));
    }

    const UnixSeconds start = hourly.front().first;
    std::vector<double> values{hourly.front().second};
    for (std::size_t i = 1; i < hourly.size(); ++i) {
        const auto [prev_t, prev_v] = hourly[i - 1];
        const auto [t, v] = hourly[i];
        const std::int64_t missing = (t - prev_t) / kSecondsPerHour - 1;
        if (missing > options.max_gap_hours)
            throw IngestionError(source + ": gap of " + std::to_string(missing) + " hours after " +
                                 format_iso8601(prev_t) + " exceeds repair limit of " +
                                 std::to_string(options.max_gap_hours));
        for (std::int64_t k = 1; k <= missing; ++k) {
            const double frac = static_cast<double>(k) / static_cast<double>(missing + 1);
            values.push_back(prev_v + (v - prev_v) * frac);
        }
        values.push_back(v);
    }
    return CarbonIntensitySeries(region, start, std::move(values));
}

std::string series_to_csv(const CarbonIntensitySeries& series) {
    std::string out = "datetime,carbon_intensity_avg\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
        out += format_iso8601(series.start() + static_cast<UnixSeconds>(i) * kSecondsPerHour);
        out += ',';
        out += format_double(series[i]);
        out += '\n';
    }
    return out;
}

void write_series_csv(const std::filesystem::path& path, const CarbonIntensitySeries& series) {
    write_file(path, series_to_csv(series));
}

std::vector<double> slice(const CarbonIntensitySeries& series, SlotIndex from, std::size_t len) {
    if (from < 0 || static_cast<std::size_t>(from) > series.size() ||
        len > series.size() - static_cast<std::size_t>(from))
        throw std::out_of_range("slice [" + std::to_string(from) + ", " + std::to_string(from + len) +
                                ") outside series of length " + std::to_string(series.size()));
    auto v = series.values().subspan(static_cast<std::size_t>(from), len);
    return {v.begin(), v.end()};
}

SlotIndex to_slot(UnixSeconds series_epoch, UnixSeconds t) {
    if (t < series_epoch) throw std::out_of_range("timestamp " + format_iso8601(t) + " precedes epoch");
    return (t - series_epoch) / kSecondsPerHour;
}

}  // namespace carbonsched
