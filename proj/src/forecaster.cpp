#include "carbonsched/forecaster.hpp"

#include <algorithm>
#include <cmath>

#include "carbonsched/csv.hpp"

namespace carbonsched {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string method_tag(const ForecastMethod& m) {
    return std::visit(overloaded{
                          [](const method::Persistence&) { return std::string("persistence"); },
                          [](const method::SeasonalNaive& s) { return "seasonal_naive/" + std::to_string(s.period); },
                          [](const method::MovingAverage& a) { return "moving_average/" + std::to_string(a.window); },
                          [](const method::Perfect&) { return std::string("perfect"); },
                      },
                      m);
}

Forecast forecast(const ForecastRequest& req, const ForecastMethod& m) {
    if (req.horizon < 1) throw ForecastError("forecast horizon must be >= 1");
    const auto& ctx = req.context;
    const std::size_t h = req.horizon;
    Forecast out{req.region, req.issue_slot, {}, method_tag(m)};
    out.values.reserve(h);

    std::visit(overloaded{
                   [&](const method::Persistence&) {
                       if (ctx.empty()) throw ForecastError("persistence needs a non-empty context");
                       out.values.assign(h, ctx.back());
                   },
                   [&](const method::SeasonalNaive& s) {
                       if (s.period < 1) throw ForecastError("seasonal period must be >= 1");
                       if (ctx.size() < s.period)
                           throw ForecastError("context of " + std::to_string(ctx.size()) +
                                               " slots is shorter than seasonal period " + std::to_string(s.period));
                       const std::size_t base = ctx.size() - s.period;
                       for (std::size_t i = 0; i < h; ++i) out.values.push_back(ctx[base + i % s.period]);
                   },
                   [&](const method::MovingAverage& a) {
                       if (a.window < 1) throw ForecastError("moving-average window must be >= 1");
                       if (ctx.size() < a.window)
                           throw ForecastError("context of " + std::to_string(ctx.size()) +
                                               " slots is shorter than moving-average window " +
                                               std::to_string(a.window));
                       double sum = 0;
                       for (std::size_t i = ctx.size() - a.window; i < ctx.size(); ++i) sum += ctx[i];
                       out.values.assign(h, sum / static_cast<double>(a.window));
                   },
                   [&](const method::Perfect& p) {
                       if (!p.actuals) throw ForecastError("perfect foresight needs an actuals series");
                       const auto n = static_cast<SlotIndex>(p.actuals->size());
                       if (req.issue_slot < 0 || req.issue_slot + static_cast<SlotIndex>(h) > n)
                           throw ForecastError("perfect foresight: actuals do not cover slots [" +
                                               std::to_string(req.issue_slot) + ", " +
                                               std::to_string(req.issue_slot + static_cast<SlotIndex>(h)) + ")");
                       out.values = slice(*p.actuals, req.issue_slot, h);
                   },
               },
               m);

    for (double& v : out.values) v = std::max(v, 0.0);
    return out;
}

ForecastErrors evaluate_forecast(std::span<const double> predicted, std::span<const double> actual) {
    if (predicted.size() != actual.size())
        throw ForecastError("length mismatch: " + std::to_string(predicted.size()) + " predicted vs " +
                            std::to_string(actual.size()) + " actual");
    ForecastErrors e;
    if (predicted.empty()) return e;
    double abs_sum = 0, sq_sum = 0, pct_sum = 0;
    std::size_t pct_n = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const double d = predicted[i] - actual[i];
        abs_sum += std::abs(d);
        sq_sum += d * d;
        if (actual[i] == 0) {
            ++e.mape_excluded;
        } else {
            pct_sum += std::abs(d / actual[i]);
            ++pct_n;
        }
    }
    const auto n = static_cast<double>(predicted.size());
    e.mae = abs_sum / n;
    e.rmse = std::sqrt(sq_sum / n);
    if (pct_n > 0) e.mape_pct = 100.0 * pct_sum / static_cast<double>(pct_n);
    return e;
}

void ForecastStore::add(Forecast f) {
    auto& list = forecasts_[f.region];
    auto it = std::lower_bound(list.begin(), list.end(), f.issue_slot,
                               [](const Forecast& a, SlotIndex s) { return a.issue_slot < s; });
    if (it != list.end() && it->issue_slot == f.issue_slot)
        *it = std::move(f);
    else
        list.insert(it, std::move(f));
}

const Forecast* ForecastStore::latest_at(const RegionId& region, SlotIndex slot) const {
    auto rit = forecasts_.find(region);
    if (rit == forecasts_.end()) return nullptr;
    const auto& list = rit->second;
    auto it = std::upper_bound(list.begin(), list.end(), slot,
                               [](SlotIndex s, const Forecast& a) { return s < a.issue_slot; });
    if (it == list.begin()) return nullptr;
    return &*std::prev(it);
}

std::size_t ForecastStore::size() const {
    std::size_t n = 0;
    for (const auto& [_, list] : forecasts_) n += list.size();
    return n;
}

std::size_t ForecastStore::size(const RegionId& region) const {
    auto it = forecasts_.find(region);
    return it == forecasts_.end() ? 0 : it->second.size();
}

void ForecastStore::merge(const ForecastStore& other) {
    for (const auto& [_, list] : other.forecasts_)
        for (const auto& f : list) add(f);
}

std::string ForecastStore::to_csv() const {
    std::string out = "region,issue_slot,target_slot,value,method\n";
    for (const auto& [region, list] : forecasts_) {
        for (const auto& f : list) {
            for (std::size_t i = 0; i < f.values.size(); ++i) {
                out += csv_escape(region.code());
                out += ',';
                out += std::to_string(f.issue_slot);
                out += ',';
                out += std::to_string(f.issue_slot + static_cast<SlotIndex>(i));
                out += ',';
                out += format_double(f.values[i]);
                out += ',';
                out += csv_escape(f.method);
                out += '\n';
            }
        }
    }
    return out;
}

void ForecastStore::write_csv(const std::filesystem::path& path) const { write_file(path, to_csv()); }

ForecastStore ForecastStore::read_csv(const std::filesystem::path& path) {
    return parse_csv(read_file(path), path.string());
}

ForecastStore ForecastStore::parse_csv(std::string_view text, const std::string& source) {
    const CsvTable table = CsvTable::parse(text, source);
    const std::size_t c_region = table.column("region");
    const std::size_t c_issue = table.column("issue_slot");
    const std::size_t c_target = table.column("target_slot");
    const std::size_t c_value = table.column("value");
    const std::size_t c_method = table.column("method");

    // (region, issue) -> target -> value
    std::map<std::pair<std::string, SlotIndex>, std::map<SlotIndex, double>> raw;
    std::map<std::pair<std::string, SlotIndex>, std::string> methods;
    for (const CsvRow& row : table.rows()) {
        const auto issue = parse_int(row.fields[c_issue]);
        const auto target = parse_int(row.fields[c_target]);
        const auto value = parse_double(row.fields[c_value]);
        if (!issue || !target || !value || !std::isfinite(*value))
            throw DataError(source, row.line, "non-numeric forecast field");
        if (*target < *issue) throw DataError(source, row.line, "target_slot precedes issue_slot");
        if (row.fields[c_region].empty()) throw DataError(source, row.line, "empty region");
        const auto key = std::make_pair(row.fields[c_region], static_cast<SlotIndex>(*issue));
        if (!raw[key].emplace(*target, std::max(*value, 0.0)).second)
            throw DataError(source, row.line, "duplicate target_slot");
        methods[key] = row.fields[c_method];
    }

    ForecastStore store;
    for (auto& [key, targets] : raw) {
        Forecast f{RegionId(key.first), key.second, {}, methods[key]};
        SlotIndex expect = key.second;
        for (const auto& [t, v] : targets) {
            if (t != expect)
                throw DataError(source, 0,
                                "forecast for " + key.first + " issued at " + std::to_string(key.second) +
                                    " is not contiguous from its issue slot");
            f.values.push_back(v);
            ++expect;
        }
        store.add(std::move(f));
    }
    return store;
}

ForecastStore rolling_forecast_store(const CarbonIntensitySeries& series, const ForecastMethod& m, std::size_t every,
                                     const ForecastSettings& settings) {
    if (every < 1) throw ForecastError("forecast cadence must be >= 1 hour");
    if (settings.horizon < 1) throw ForecastError("forecast horizon must be >= 1");
    const std::size_t p = settings.context_length;
    if (series.size() < p + 1)
        throw ForecastError("series of " + std::to_string(series.size()) + " slots is shorter than context length " +
                            std::to_string(p) + " + 1");
    const bool perfect = std::holds_alternative<method::Perfect>(m);

    ForecastStore store;
    for (std::size_t issue = p; issue < series.size(); issue += every) {
        ForecastRequest req{series.region(), slice(series, static_cast<SlotIndex>(issue - p), p),
                            static_cast<SlotIndex>(issue), settings.horizon};
        if (perfect) req.horizon = std::min(settings.horizon, series.size() - issue);
        store.add(forecast(req, m));
    }
    return store;
}

}  // namespace carbonsched
