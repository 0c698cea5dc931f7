#include "carbonsched/power.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "carbonsched/csv.hpp"

namespace carbonsched {

PowerModel::PowerModel(std::string name, std::vector<std::pair<double, double>> points)
    : name_(std::move(name)), points_(std::move(points)) {
    if (points_.size() < 2) throw std::invalid_argument("power model needs at least two points");
    if (points_.front().first != 0.0 || points_.back().first != 1.0)
        throw std::invalid_argument("power model must span utilization 0 to 1");
    for (std::size_t i = 0; i < points_.size(); ++i) {
        const auto [u, w] = points_[i];
        if (!std::isfinite(u) || !std::isfinite(w) || w < 0)
            throw std::invalid_argument("power model point must be finite with non-negative watts");
        if (i > 0 && !(u > points_[i - 1].first))
            throw std::invalid_argument("power model utilizations must be strictly increasing");
        if (i > 0 && w < points_[i - 1].second)
            throw std::invalid_argument("power model watts must be non-decreasing");
    }
}

PowerModel PowerModel::representative() {
    // Representative, not a published SPECpower result.
    return PowerModel("representative-xeon-gold-6433n",
                      {{0.0, 112.0},
                       {0.1, 158.0},
                       {0.2, 182.0},
                       {0.3, 204.0},
                       {0.4, 226.0},
                       {0.5, 249.0},
                       {0.6, 275.0},
                       {0.7, 304.0},
                       {0.8, 338.0},
                       {0.9, 376.0},
                       {1.0, 418.0}});
}

PowerModel PowerModel::read_csv(const std::filesystem::path& path) {
    const CsvTable t = CsvTable::read(path);
    const auto cu = t.column("utilization_pct"), cw = t.column("watts");
    std::vector<std::pair<double, double>> pts;
    for (const CsvRow& row : t.rows()) {
        const auto u = parse_double(row.fields[cu]);
        const auto w = parse_double(row.fields[cw]);
        if (!u || !w) throw DataError(path.string(), row.line, "non-numeric power model row");
        pts.emplace_back(*u / 100.0, *w);
    }
    std::sort(pts.begin(), pts.end());
    try {
        return PowerModel(path.stem().string(), std::move(pts));
    } catch (const std::invalid_argument& e) {
        throw DataError(path.string(), 0, e.what());
    }
}

double power_at(const PowerModel& model, double u) {
    if (!(u >= 0.0 && u <= 1.0)) throw std::out_of_range("utilization must lie in [0, 1]");
    const auto& pts = model.points();
    auto hi = std::lower_bound(pts.begin(), pts.end(), u, [](const auto& p, double x) { return p.first < x; });
    if (hi->first == u) return hi->second;
    const auto lo = std::prev(hi);
    const double f = (u - lo->first) / (hi->first - lo->first);
    return lo->second + f * (hi->second - lo->second);
}

}  // namespace carbonsched
