#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace carbonsched {

// Utilization -> watts curve in SPECpower style (load levels 0%..100%).
class PowerModel {
public:
    // Utilizations strictly increasing from 0 to 1, watts non-decreasing.
    PowerModel(std::string name, std::vector<std::pair<double, double>> points);

    // Bundled representative 11-point table for a 32-core Xeon Gold 6433N class host.
    static PowerModel representative();
    // CSV columns: utilization_pct, watts.
    static PowerModel read_csv(const std::filesystem::path& path);

    const std::string& name() const noexcept { return name_; }
    const std::vector<std::pair<double, double>>& points() const noexcept { return points_; }
    double idle_watts() const { return points_.front().second; }

private:
    std::string name_;
    std::vector<std::pair<double, double>> points_;
};

// Piecewise-linear interpolation. Throws std::out_of_range outside [0, 1].
double power_at(const PowerModel& model, double utilization);

}  // namespace carbonsched
