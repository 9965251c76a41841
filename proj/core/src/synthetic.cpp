#include <algorithm>
#include <cmath>

#include "flowcast/dataset.hpp"

namespace flowcast {

namespace {

std::vector<double> default_weights() {
    return std::vector<double>(kRainStations, 1.0 / static_cast<double>(kRainStations));
}

std::vector<std::size_t> default_lags() { return {1, 1, 2, 2, 3, 3, 4, 4, 5, 6, 7}; }

std::vector<double> resolved_weights(const SyntheticConfig& c) {
    return c.station_weights.empty() ? default_weights() : c.station_weights;
}

std::vector<std::size_t> resolved_lags(const SyntheticConfig& c) {
    return c.station_lags.empty() ? default_lags() : c.station_lags;
}

// Storage recursion driven by lagged station rain.
std::vector<double> storage_path(const SyntheticConfig& config,
                                 const std::vector<std::vector<double>>& rain) {
    const auto w = resolved_weights(config);
    const auto lags = resolved_lags(config);
    const std::size_t n = config.n_hours;
    std::vector<double> storage(n, 0.0);
    double s = config.initial_storage;
    for (std::size_t t = 0; t < n; ++t) {
        storage[t] = s;
        double inflow = 0.0;
        for (std::size_t j = 0; j < kRainStations; ++j) {
            if (t >= lags[j]) inflow += w[j] * rain[j][t - lags[j]];
        }
        s = (1.0 - config.recession) * s + inflow;
    }
    return storage;
}

}  // namespace

void SyntheticConfig::validate() const {
    if (n_hours < 100) throw ConfigError("synthetic series needs at least 100 hours");
    if (!(recession > 0.0 && recession < 1.0)) {
        throw ConfigError("recession constant k must lie in (0, 1)");
    }
    if (!(storm_probability >= 0.0 && storm_probability <= 1.0) ||
        !(drizzle_probability >= 0.0 && drizzle_probability <= 1.0)) {
        throw ConfigError("probabilities must lie in [0, 1]");
    }
    if (mean_storm_hours < 1.0 || mean_intensity < 0.0 || drizzle_mean < 0.0 ||
        station_spread < 0.0 || hourly_variability < 0.0 || flow_noise < 0.0 ||
        initial_storage < 0.0 || discharge_coefficient <= 0.0 || base_flow < 0.0) {
        throw ConfigError("synthetic storm/reservoir parameters out of range");
    }
    if (!station_weights.empty()) {
        if (station_weights.size() != kRainStations) {
            throw ConfigError("station_weights needs 11 values");
        }
        for (double x : station_weights) {
            if (!(x >= 0.0)) throw ConfigError("station weights must be >= 0");
        }
    }
    if (!station_lags.empty() && station_lags.size() != kRainStations) {
        throw ConfigError("station_lags needs 11 values");
    }
}

std::vector<double> reservoir_response(const SyntheticConfig& config,
                                       const std::vector<std::vector<double>>& station_rain) {
    config.validate();
    if (station_rain.size() != kRainStations) throw ShapeError("need 11 station rain series");
    for (const auto& r : station_rain) {
        if (r.size() != config.n_hours) throw ShapeError("rain series length mismatch");
    }
    const auto storage = storage_path(config, station_rain);
    std::vector<double> flow(config.n_hours);
    for (std::size_t t = 0; t < flow.size(); ++t) {
        flow[t] = config.base_flow + config.discharge_coefficient * storage[t];
    }
    return flow;
}

TimeSeriesTable generate_synthetic(Rng& rng, const SyntheticConfig& config) {
    config.validate();
    const std::size_t n = config.n_hours;
    std::vector<std::vector<double>> rain(kRainStations, std::vector<double>(n, 0.0));

    if (!config.zero_rain) {
        std::size_t storm_left = 0;
        std::size_t storm_len = 0;
        double peak = 0.0;
        std::vector<double> station_factor(kRainStations, 1.0);
        const double spread = config.station_spread;
        const double jitter = config.hourly_variability;
        for (std::size_t t = 0; t < n; ++t) {
            if (storm_left == 0 && rng.uniform() < config.storm_probability) {
                // Geometric duration with the configured mean, at least one hour.
                const double p = 1.0 / config.mean_storm_hours;
                storm_len = 1;
                while (rng.uniform() > p && storm_len < 20 * config.mean_storm_hours) ++storm_len;
                storm_left = storm_len;
                peak = rng.exponential(config.mean_intensity);
                for (auto& f : station_factor) {
                    f = std::exp(spread * rng.normal() - 0.5 * spread * spread);
                }
            }
            if (storm_left > 0) {
                // Triangular hyetograph: rises to the peak at one third of the storm.
                const double k = static_cast<double>(storm_len - storm_left) + 0.5;
                const double apex = static_cast<double>(storm_len) / 3.0;
                const double shape = k <= apex ? k / apex
                                               : (static_cast<double>(storm_len) - k) /
                                                     (static_cast<double>(storm_len) - apex);
                for (std::size_t j = 0; j < kRainStations; ++j) {
                    const double noise = std::exp(jitter * rng.normal() - 0.5 * jitter * jitter);
                    rain[j][t] = std::max(0.0, peak * shape * station_factor[j] * noise);
                }
                --storm_left;
            } else {
                for (std::size_t j = 0; j < kRainStations; ++j) {
                    if (rng.uniform() < config.drizzle_probability) {
                        rain[j][t] = rng.exponential(config.drizzle_mean);
                    }
                }
            }
        }
    }

    const auto storage = storage_path(config, rain);
    std::vector<double> flow(n);
    for (std::size_t t = 0; t < n; ++t) {
        const double eta = config.flow_noise * rng.normal();
        flow[t] = config.base_flow +
                  config.discharge_coefficient * storage[t] * std::max(0.0, 1.0 + eta);
    }

    std::vector<EpochHour> timestamps(n);
    for (std::size_t t = 0; t < n; ++t) timestamps[t] = config.start + static_cast<EpochHour>(t);

    std::vector<Column> columns;
    columns.push_back({std::string(kFlowColumn), std::move(flow)});
    for (std::size_t j = 0; j < kRainStations; ++j) {
        columns.push_back({rain_column_name(j + 1), std::move(rain[j])});
    }
    return TimeSeriesTable(std::move(timestamps), std::move(columns));
}

}  // namespace flowcast
