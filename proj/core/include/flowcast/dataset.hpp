#pragma once

// Hourly flow/rain tables, windowing into supervised rows, min-max scaling,
// chronological splitting and the synthetic catchment generator.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "flowcast/numcore.hpp"

namespace flowcast {

/// Hours since 1970-01-01 00:00 UTC.
using EpochHour = std::int64_t;

inline constexpr std::size_t kRainStations = 11;
inline constexpr std::string_view kFlowColumn = "Q";
inline constexpr std::string_view kArealColumn = "A";

/// "P1" .. "P11"
std::string rain_column_name(std::size_t station);

struct Column {
    std::string name;
    std::vector<double> values;
};

/// Half-open row range [begin, end) of consecutive hourly observations.
struct Segment {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t size() const noexcept { return end - begin; }
};

/// Timestamped multivariate series; column 0 is flow, the rest are rain.
///
/// Construction validates that timestamps strictly increase, that every column
/// matches the timestamp count and that all values are finite and >= 0.
/// A segment break is recorded at every row whose timestamp is more than one
/// hour after its predecessor.
class TimeSeriesTable {
public:
    TimeSeriesTable() = default;
    TimeSeriesTable(std::vector<EpochHour> timestamps, std::vector<Column> columns);

    std::size_t size() const noexcept { return timestamps_.size(); }
    const std::vector<EpochHour>& timestamps() const noexcept { return timestamps_; }
    const std::vector<Column>& columns() const noexcept { return columns_; }

    bool has_column(std::string_view name) const noexcept;
    const Column& column(std::string_view name) const;

    /// Row indices that start a new segment (excluding row 0).
    const std::vector<std::size_t>& segment_breaks() const noexcept { return breaks_; }
    std::vector<Segment> segments() const;

    /// Copy with `column` appended (or replaced if the name already exists).
    TimeSeriesTable with_column(Column column) const;

private:
    std::vector<EpochHour> timestamps_;
    std::vector<Column> columns_;
    std::vector<std::size_t> breaks_;
};

/// Accepts "YYYY-MM-DD HH:00" (also "HH:MM" with MM == 00) or an integer epoch-hour.
EpochHour parse_timestamp(std::string_view text);
/// "YYYY-MM-DD HH:00"
std::string format_timestamp(EpochHour hour);

/// Reads the `timestamp,Q,P1,...,P11` schema. `source` labels error messages.
TimeSeriesTable read_csv(std::istream& in, std::string_view source = "<stream>");
TimeSeriesTable load_csv(const std::filesystem::path& path);
void write_csv(const TimeSeriesTable& table, std::ostream& out);
void save_csv(const TimeSeriesTable& table, const std::filesystem::path& path);

/// Which variables feed the model, in the fixed order Q, P1..P11, A.
struct VariableSet {
    bool flow = true;
    bool rain = true;
    bool areal = false;

    std::size_t count() const noexcept;
    std::vector<std::string> names() const;
    bool empty() const noexcept { return !flow && !rain && !areal; }
    /// "flow+rain", "rain+areal", ...
    std::string label() const;
    /// Parses '+'- or ','-separated tokens from {flow, rain, areal}.
    static VariableSet parse(std::string_view text);

    friend bool operator==(const VariableSet&, const VariableSet&) = default;
};

struct SupervisedMatrix {
    Matrix features;  // n_samples x (encoder_steps * n_variables), time-major
    Vector targets;
    std::vector<std::string> feature_names;
    std::string target_name;
    std::vector<EpochHour> target_timestamps;
    std::size_t encoder_steps = 0;
    std::size_t predict_step = 0;
    std::size_t n_variables = 0;

    std::size_t rows() const noexcept { return targets.size(); }
    std::size_t n_features() const noexcept { return features.cols(); }
};

/// "Q(t-12)", "P3(t)", "Q(t+5)"
std::string lag_label(std::string_view variable, long offset);

/// Column labels of the full lagged frame, offsets -encoder_steps .. predict_step-1,
/// variables innermost. Features are the first encoder_steps*|vars| labels.
std::vector<std::string> supervised_layout(std::size_t encoder_steps, std::size_t predict_step,
                                           std::span<const std::string> variables);

/// Windows each contiguous segment: for every anchor t, features are the selected
/// variables at t-encoder_steps .. t-1 and the target is Q at t+predict_step-1.
/// A segment of length L yields max(0, L - encoder_steps - predict_step + 1) rows.
/// Requesting areal rainfall on a table without an "A" column derives it with
/// uniform station weights. Throws DataError if no segment is long enough.
SupervisedMatrix series_to_supervised(const TimeSeriesTable& table, std::size_t encoder_steps,
                                      std::size_t predict_step, VariableSet variables);

/// Rows [first, last) of a supervised matrix.
SupervisedMatrix slice_rows(const SupervisedMatrix& m, std::size_t first, std::size_t last);
/// Rows at the given indices, in order.
SupervisedMatrix select_rows(const SupervisedMatrix& m, std::span<const std::size_t> indices);

/// Per-column min-max scaling to [0, 1] over the fitted data.
class MinMaxScaler {
public:
    static constexpr double kEpsilonGuard = 1e-12;

    MinMaxScaler() = default;
    MinMaxScaler(std::vector<std::string> names, Vector min, Vector max);

    /// Column statistics of `data`; needs at least one row.
    static MinMaxScaler fit(const Matrix& data, std::vector<std::string> names = {});

    std::size_t columns() const noexcept { return min_.size(); }
    const Vector& min() const noexcept { return min_; }
    const Vector& max() const noexcept { return max_; }
    const std::vector<std::string>& names() const noexcept { return names_; }

    /// Constant columns (range below the guard) map to 0.
    double transform_value(std::size_t column, double x) const noexcept;
    double inverse_value(std::size_t column, double scaled) const noexcept;

    Matrix transform(const Matrix& data) const;
    Matrix inverse_transform(const Matrix& scaled) const;

    /// One `name,min,max` line per column, 17 significant digits.
    void save(std::ostream& out) const;
    static MinMaxScaler load(std::istream& in);

    friend bool operator==(const MinMaxScaler&, const MinMaxScaler&) = default;

private:
    std::vector<std::string> names_;
    Vector min_;
    Vector max_;
};

/// Scaler over the feature columns followed by the target as the last column.
MinMaxScaler fit_scaler(const SupervisedMatrix& m);
SupervisedMatrix transform(const MinMaxScaler& scaler, const SupervisedMatrix& m);
SupervisedMatrix inverse_transform(const MinMaxScaler& scaler, const SupervisedMatrix& m);
/// Maps scaled target values back to physical units.
Vector inverse_transform_targets(const MinMaxScaler& scaler, std::span<const double> scaled);

class SplitSpec {
public:
    static SplitSpec count(std::size_t train_count) { return SplitSpec(train_count); }
    static SplitSpec fraction(double train_fraction) { return SplitSpec(train_fraction); }

    /// Training row count for `n_samples`; throws ConfigError unless in [1, n-1].
    std::size_t resolve(std::size_t n_samples) const;

    const std::variant<std::size_t, double>& value() const noexcept { return value_; }

private:
    explicit SplitSpec(std::variant<std::size_t, double> v) : value_(v) {}
    std::variant<std::size_t, double> value_;
};

/// Chronological split: the first resolved rows train, the rest test.
std::pair<SupervisedMatrix, SupervisedMatrix> split(const SupervisedMatrix& m, const SplitSpec& spec);

/// Weighted mean of the 11 station columns; uniform weights when none are given.
/// Weights must be 11 non-negative values summing to 1.
Column areal_rainfall(const TimeSeriesTable& table,
                      std::optional<std::span<const double>> weights = std::nullopt);

/// Parameters of the synthetic storm / linear-reservoir catchment.
struct SyntheticConfig {
    std::size_t n_hours = 8000;
    EpochHour start = 96432;  // 1981-01-01 00:00

    // Storms arrive as a Bernoulli process and last a geometric number of hours.
    double storm_probability = 0.012;
    double mean_storm_hours = 10.0;
    double mean_intensity = 4.0;       // mm/h, catchment-average peak
    double station_spread = 0.6;       // log-normal spread of per-station intensity
    double hourly_variability = 0.5;   // hourly multiplicative jitter within a storm
    double drizzle_probability = 0.03;
    double drizzle_mean = 0.2;

    // S_{t+1} = (1-k) S_t + sum_j w_j P_j(t - lag_j);  Q_t = c * S_t * (1 + noise)
    double recession = 0.06;
    double initial_storage = 10.0;
    double discharge_coefficient = 25.0;
    double base_flow = 0.0;
    double flow_noise = 0.02;
    std::vector<double> station_weights;   // 11 values; default uniform
    std::vector<std::size_t> station_lags; // 11 values in hours; default 1..6 spread
    bool zero_rain = false;

    void validate() const;
};

TimeSeriesTable generate_synthetic(Rng& rng, const SyntheticConfig& config);

/// Flow response of the reservoir recursion to a prescribed rain field, without noise.
/// Exposed for tests and for generating deterministic unit-response curves.
std::vector<double> reservoir_response(const SyntheticConfig& config,
                                       const std::vector<std::vector<double>>& station_rain);

}  // namespace flowcast
