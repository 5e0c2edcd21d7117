#pragma once

#include <string>
#include <vector>

namespace hbnet::data {

/// One raw weather reading (typically hourly) at a site.
struct WeatherRecord {
    std::string site;
    int year = 0;
    int month = 0;
    int day = 0;
    double temperature = 0.0;
    double humidity = 0.0;
};

/// Inclusive month range summarised as one period.
struct WeatherPeriod {
    int first_month;
    int last_month;
};

/// May-June, July-August, September-October.
std::vector<WeatherPeriod> default_periods();

/// Per (site, year) summary. For P periods the vectors hold, in order:
/// mean temperature, mean diurnal temperature range, mean humidity and mean
/// diurnal humidity range, one entry per period. Diurnal range is the mean
/// over days of (daily max - daily min).
struct WeatherSummary {
    std::string site;
    int year = 0;
    std::vector<double> mean_temperature;
    std::vector<double> temperature_range;
    std::vector<double> mean_humidity;
    std::vector<double> humidity_range;
};

/// Column names T1..T{2P}, RH1..RH{2P}: means first, then ranges.
std::vector<std::string> weather_column_names(std::size_t periods);

/// Summaries sorted by (site, year). Periods without readings yield NaN.
std::vector<WeatherSummary> aggregate_weather(const std::vector<WeatherRecord>& records,
                                              const std::vector<WeatherPeriod>& periods);

/// Flattens one summary in weather_column_names() order.
std::vector<double> flatten(const WeatherSummary& s);

}  // namespace hbnet::data
