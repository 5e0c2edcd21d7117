#include "hbnet/weather.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <tuple>

namespace hbnet::data {

std::vector<WeatherPeriod> default_periods() { return {{5, 6}, {7, 8}, {9, 10}}; }

std::vector<std::string> weather_column_names(std::size_t periods) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < 2 * periods; ++i) names.push_back("T" + std::to_string(i + 1));
    for (std::size_t i = 0; i < 2 * periods; ++i) names.push_back("RH" + std::to_string(i + 1));
    return names;
}

namespace {

struct DayStats {
    double t_min = std::numeric_limits<double>::infinity();
    double t_max = -std::numeric_limits<double>::infinity();
    double h_min = std::numeric_limits<double>::infinity();
    double h_max = -std::numeric_limits<double>::infinity();
};

struct PeriodAcc {
    double t_sum = 0.0, h_sum = 0.0;
    std::size_t count = 0;
    std::map<std::pair<int, int>, DayStats> days;
};

}  // namespace

std::vector<WeatherSummary> aggregate_weather(const std::vector<WeatherRecord>& records,
                                              const std::vector<WeatherPeriod>& periods) {
    using Key = std::pair<std::string, int>;
    std::map<Key, std::vector<PeriodAcc>> acc;
    for (const auto& r : records) {
        auto& per = acc[{r.site, r.year}];
        per.resize(periods.size());
        for (std::size_t p = 0; p < periods.size(); ++p) {
            if (r.month < periods[p].first_month || r.month > periods[p].last_month) continue;
            auto& a = per[p];
            a.t_sum += r.temperature;
            a.h_sum += r.humidity;
            ++a.count;
            auto& d = a.days[{r.month, r.day}];
            d.t_min = std::min(d.t_min, r.temperature);
            d.t_max = std::max(d.t_max, r.temperature);
            d.h_min = std::min(d.h_min, r.humidity);
            d.h_max = std::max(d.h_max, r.humidity);
        }
    }

    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<WeatherSummary> out;
    for (const auto& [key, per] : acc) {
        WeatherSummary s{key.first, key.second, {}, {}, {}, {}};
        for (const auto& a : per) {
            if (a.count == 0) {
                s.mean_temperature.push_back(nan);
                s.temperature_range.push_back(nan);
                s.mean_humidity.push_back(nan);
                s.humidity_range.push_back(nan);
                continue;
            }
            double t_range = 0.0, h_range = 0.0;
            for (const auto& [day, d] : a.days) {
                t_range += d.t_max - d.t_min;
                h_range += d.h_max - d.h_min;
            }
            const auto n = static_cast<double>(a.count);
            const auto n_days = static_cast<double>(a.days.size());
            s.mean_temperature.push_back(a.t_sum / n);
            s.temperature_range.push_back(t_range / n_days);
            s.mean_humidity.push_back(a.h_sum / n);
            s.humidity_range.push_back(h_range / n_days);
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<double> flatten(const WeatherSummary& s) {
    std::vector<double> v;
    v.insert(v.end(), s.mean_temperature.begin(), s.mean_temperature.end());
    v.insert(v.end(), s.temperature_range.begin(), s.temperature_range.end());
    v.insert(v.end(), s.mean_humidity.begin(), s.mean_humidity.end());
    v.insert(v.end(), s.humidity_range.begin(), s.humidity_range.end());
    return v;
}

}  // namespace hbnet::data
