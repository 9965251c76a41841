#include "flowcast/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

namespace flowcast {

std::string rain_column_name(std::size_t station) { return "P" + std::to_string(station); }

TimeSeriesTable::TimeSeriesTable(std::vector<EpochHour> timestamps, std::vector<Column> columns)
    : timestamps_(std::move(timestamps)), columns_(std::move(columns)) {
    for (std::size_t i = 1; i < timestamps_.size(); ++i) {
        if (timestamps_[i] <= timestamps_[i - 1]) {
            throw DataError("timestamps must strictly increase (row " + std::to_string(i + 1) +
                            ")");
        }
        if (timestamps_[i] - timestamps_[i - 1] > 1) breaks_.push_back(i);
    }
    for (const auto& col : columns_) {
        if (col.values.size() != timestamps_.size()) {
            throw DataError("column " + col.name + " has " + std::to_string(col.values.size()) +
                            " values for " + std::to_string(timestamps_.size()) + " timestamps");
        }
        for (std::size_t i = 0; i < col.values.size(); ++i) {
            const double v = col.values[i];
            if (!std::isfinite(v) || v < 0.0) {
                throw DataError("column " + col.name + " row " + std::to_string(i + 1) +
                                ": value must be finite and >= 0");
            }
        }
    }
}

bool TimeSeriesTable::has_column(std::string_view name) const noexcept {
    return std::any_of(columns_.begin(), columns_.end(),
                       [&](const Column& c) { return c.name == name; });
}

const Column& TimeSeriesTable::column(std::string_view name) const {
    for (const auto& c : columns_) {
        if (c.name == name) return c;
    }
    throw DataError("missing column " + std::string(name));
}

std::vector<Segment> TimeSeriesTable::segments() const {
    std::vector<Segment> out;
    if (timestamps_.empty()) return out;
    std::size_t begin = 0;
    for (std::size_t b : breaks_) {
        out.push_back({begin, b});
        begin = b;
    }
    out.push_back({begin, timestamps_.size()});
    return out;
}

TimeSeriesTable TimeSeriesTable::with_column(Column column) const {
    std::vector<Column> cols = columns_;
    auto it = std::find_if(cols.begin(), cols.end(),
                           [&](const Column& c) { return c.name == column.name; });
    if (it != cols.end()) {
        *it = std::move(column);
    } else {
        cols.push_back(std::move(column));
    }
    return TimeSeriesTable(timestamps_, std::move(cols));
}

// ---------------------------------------------------------------------------
// Timestamps

namespace {

bool parse_int(std::string_view text, long long& out) {
    if (text.empty()) return false;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            fields.push_back(trim(line.substr(start)));
            break;
        }
        fields.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
    return fields;
}

}  // namespace

EpochHour parse_timestamp(std::string_view text) {
    text = trim(text);
    long long hours = 0;
    if (parse_int(text, hours)) return hours;

    // YYYY-MM-DD HH:MM
    long long y = 0, mo = 0, d = 0, h = 0, mi = 0;
    if (text.size() != 16 || text[4] != '-' || text[7] != '-' ||
        (text[10] != ' ' && text[10] != 'T') || text[13] != ':' ||
        !parse_int(text.substr(0, 4), y) || !parse_int(text.substr(5, 2), mo) ||
        !parse_int(text.substr(8, 2), d) || !parse_int(text.substr(11, 2), h) ||
        !parse_int(text.substr(14, 2), mi)) {
        throw DataError("unparseable timestamp '" + std::string(text) + "'");
    }
    if (mi != 0 || h < 0 || h > 23) {
        throw DataError("timestamp '" + std::string(text) + "' is not on an hour boundary");
    }
    const std::chrono::year_month_day ymd{std::chrono::year(static_cast<int>(y)),
                                          std::chrono::month(static_cast<unsigned>(mo)),
                                          std::chrono::day(static_cast<unsigned>(d))};
    if (!ymd.ok()) throw DataError("invalid calendar date '" + std::string(text) + "'");
    const auto days = std::chrono::sys_days(ymd).time_since_epoch().count();
    return static_cast<EpochHour>(days) * 24 + h;
}

std::string format_timestamp(EpochHour hour) {
    EpochHour days = hour / 24;
    EpochHour h = hour % 24;
    if (h < 0) {
        h += 24;
        days -= 1;
    }
    const std::chrono::year_month_day ymd{
        std::chrono::sys_days(std::chrono::days(static_cast<int>(days)))};
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u %02d:00", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(h));
    return buf;
}

// ---------------------------------------------------------------------------
// CSV

TimeSeriesTable read_csv(std::istream& in, std::string_view source) {
    const std::string where(source);
    std::string line;
    if (!std::getline(in, line)) throw DataError(where + ": empty file");
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // BOM

    std::vector<std::string> expected{"timestamp", std::string(kFlowColumn)};
    for (std::size_t s = 1; s <= kRainStations; ++s) expected.push_back(rain_column_name(s));

    const auto header = split_fields(line);
    for (std::size_t i = 0; i < expected.size(); ++i) {
        if (i >= header.size()) throw DataError(where + ": missing column " + expected[i]);
        if (header[i] != expected[i]) {
            throw DataError(where + ": header column " + std::to_string(i + 1) + " is '" +
                            std::string(header[i]) + "', expected '" + expected[i] + "'");
        }
    }
    if (header.size() > expected.size()) {
        throw DataError(where + ": unexpected extra column '" + std::string(header[expected.size()]) +
                        "'");
    }

    std::vector<EpochHour> timestamps;
    std::vector<Column> columns;
    for (std::size_t i = 1; i < expected.size(); ++i) columns.push_back({expected[i], {}});

    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        ++row;
        const auto fields = split_fields(line);
        if (fields.size() != expected.size()) {
            throw DataError(where + ": row " + std::to_string(row) + " has " +
                            std::to_string(fields.size()) + " fields, expected " +
                            std::to_string(expected.size()));
        }
        try {
            timestamps.push_back(parse_timestamp(fields[0]));
        } catch (const DataError& e) {
            throw DataError(where + ": row " + std::to_string(row) + ", column timestamp: " +
                            e.what());
        }
        for (std::size_t c = 1; c < fields.size(); ++c) {
            double value = 0.0;
            const auto f = fields[c];
            auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), value);
            if (f.empty() || ec != std::errc{} || ptr != f.data() + f.size() ||
                !std::isfinite(value)) {
                throw DataError(where + ": row " + std::to_string(row) + ", column " +
                                expected[c] + ": non-numeric value '" + std::string(f) + "'");
            }
            if (value < 0.0) {
                throw DataError(where + ": row " + std::to_string(row) + ", column " +
                                expected[c] + ": negative value " + std::string(f));
            }
            columns[c - 1].values.push_back(value);
        }
        if (timestamps.size() > 1 && timestamps.back() <= timestamps[timestamps.size() - 2]) {
            throw DataError(where + ": row " + std::to_string(row) +
                            ": timestamp does not increase");
        }
    }
    return TimeSeriesTable(std::move(timestamps), std::move(columns));
}

TimeSeriesTable load_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    return read_csv(in, path.string());
}

void write_csv(const TimeSeriesTable& table, std::ostream& out) {
    out << "timestamp," << kFlowColumn;
    std::vector<const Column*> cols{&table.column(kFlowColumn)};
    for (std::size_t s = 1; s <= kRainStations; ++s) {
        out << ',' << rain_column_name(s);
        cols.push_back(&table.column(rain_column_name(s)));
    }
    out << '\n';
    char buf[64];
    for (std::size_t i = 0; i < table.size(); ++i) {
        out << format_timestamp(table.timestamps()[i]);
        for (const Column* c : cols) {
            std::snprintf(buf, sizeof(buf), "%.17g", c->values[i]);
            out << ',' << buf;
        }
        out << '\n';
    }
}

void save_csv(const TimeSeriesTable& table, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    write_csv(table, out);
}

// ---------------------------------------------------------------------------
// Variable selection and windowing

std::size_t VariableSet::count() const noexcept {
    return (flow ? 1 : 0) + (rain ? kRainStations : 0) + (areal ? 1 : 0);
}

std::vector<std::string> VariableSet::names() const {
    std::vector<std::string> out;
    if (flow) out.emplace_back(kFlowColumn);
    if (rain) {
        for (std::size_t s = 1; s <= kRainStations; ++s) out.push_back(rain_column_name(s));
    }
    if (areal) out.emplace_back(kArealColumn);
    return out;
}

std::string VariableSet::label() const {
    std::string out;
    auto add = [&](const char* s) {
        if (!out.empty()) out += '+';
        out += s;
    };
    if (flow) add("flow");
    if (rain) add("rain");
    if (areal) add("areal");
    return out.empty() ? "none" : out;
}

VariableSet VariableSet::parse(std::string_view text) {
    VariableSet v{false, false, false};
    std::size_t start = 0;
    while (start <= text.size()) {
        auto pos = text.find_first_of("+,", start);
        auto token = trim(text.substr(start, pos == std::string_view::npos ? text.size() - start
                                                                           : pos - start));
        if (token == "flow") {
            v.flow = true;
        } else if (token == "rain" || token == "rainfall") {
            v.rain = true;
        } else if (token == "areal") {
            v.areal = true;
        } else if (!token.empty()) {
            throw ConfigError("unknown input variable '" + std::string(token) +
                              "' (expected flow, rain, areal)");
        }
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    if (v.empty()) throw ConfigError("input selection '" + std::string(text) + "' is empty");
    return v;
}

std::string lag_label(std::string_view variable, long offset) {
    std::string out(variable);
    out += "(t";
    if (offset > 0) {
        out += "+" + std::to_string(offset);
    } else if (offset < 0) {
        out += "-" + std::to_string(-offset);
    }
    out += ")";
    return out;
}

std::vector<std::string> supervised_layout(std::size_t encoder_steps, std::size_t predict_step,
                                           std::span<const std::string> variables) {
    std::vector<std::string> labels;
    const long first = -static_cast<long>(encoder_steps);
    const long last = static_cast<long>(predict_step) - 1;
    for (long off = first; off <= last; ++off) {
        for (const auto& v : variables) labels.push_back(lag_label(v, off));
    }
    return labels;
}

SupervisedMatrix series_to_supervised(const TimeSeriesTable& table, std::size_t encoder_steps,
                                      std::size_t predict_step, VariableSet variables) {
    if (encoder_steps == 0) throw ConfigError("encoder_steps must be >= 1");
    if (predict_step == 0) throw ConfigError("predict_step must be >= 1");
    if (variables.empty()) throw ConfigError("no input variables selected");

    const TimeSeriesTable* source = &table;
    TimeSeriesTable with_areal;
    if (variables.areal && !table.has_column(kArealColumn)) {
        with_areal = table.with_column(areal_rainfall(table));
        source = &with_areal;
    }

    const auto names = variables.names();
    std::vector<const std::vector<double>*> series;
    for (const auto& n : names) series.push_back(&source->column(n).values);
    const auto& flow = source->column(kFlowColumn).values;

    const std::size_t span_len = encoder_steps + predict_step - 1;
    const auto segments = source->segments();
    std::size_t n_rows = 0;
    for (const auto& seg : segments) {
        if (seg.size() > span_len) n_rows += seg.size() - span_len;
    }
    if (n_rows == 0) {
        std::ostringstream msg;
        msg << "no segment is long enough for encoder_steps=" << encoder_steps
            << " and predict_step=" << predict_step << " (need at least " << span_len + 1
            << " consecutive hours); segment lengths:";
        for (const auto& seg : segments) msg << ' ' << seg.size();
        throw DataError(msg.str());
    }

    const std::size_t n_vars = names.size();
    SupervisedMatrix out;
    out.features = Matrix(n_rows, encoder_steps * n_vars);
    out.targets = Vector(n_rows);
    out.target_timestamps.reserve(n_rows);
    out.encoder_steps = encoder_steps;
    out.predict_step = predict_step;
    out.n_variables = n_vars;
    auto layout = supervised_layout(encoder_steps, predict_step, names);
    out.feature_names.assign(layout.begin(), layout.begin() + encoder_steps * n_vars);
    out.target_name = lag_label(kFlowColumn, static_cast<long>(predict_step) - 1);

    std::size_t r = 0;
    for (const auto& seg : segments) {
        if (seg.size() <= span_len) continue;
        // Anchor t: features from rows t-E..t-1, target at row t+P-1.
        for (std::size_t t = seg.begin + encoder_steps; t + predict_step <= seg.end; ++t) {
            auto row = out.features.row(r);
            std::size_t k = 0;
            for (std::size_t lag = t - encoder_steps; lag < t; ++lag) {
                for (std::size_t v = 0; v < n_vars; ++v) row[k++] = (*series[v])[lag];
            }
            out.targets[r] = flow[t + predict_step - 1];
            out.target_timestamps.push_back(source->timestamps()[t + predict_step - 1]);
            ++r;
        }
    }
    return out;
}

SupervisedMatrix slice_rows(const SupervisedMatrix& m, std::size_t first, std::size_t last) {
    if (first > last || last > m.rows()) throw ShapeError("slice_rows: range out of bounds");
    std::vector<std::size_t> idx(last - first);
    std::iota(idx.begin(), idx.end(), first);
    return select_rows(m, idx);
}

SupervisedMatrix select_rows(const SupervisedMatrix& m, std::span<const std::size_t> indices) {
    SupervisedMatrix out;
    out.features = Matrix(indices.size(), m.n_features());
    out.targets = Vector(indices.size());
    out.feature_names = m.feature_names;
    out.target_name = m.target_name;
    out.encoder_steps = m.encoder_steps;
    out.predict_step = m.predict_step;
    out.n_variables = m.n_variables;
    out.target_timestamps.reserve(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const std::size_t src = indices[i];
        if (src >= m.rows()) throw ShapeError("select_rows: index out of bounds");
        std::copy(m.features.row(src).begin(), m.features.row(src).end(),
                  out.features.row(i).begin());
        out.targets[i] = m.targets[src];
        if (!m.target_timestamps.empty()) out.target_timestamps.push_back(m.target_timestamps[src]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Split and areal rainfall

std::size_t SplitSpec::resolve(std::size_t n_samples) const {
    std::size_t train = 0;
    if (const auto* count = std::get_if<std::size_t>(&value_)) {
        train = *count;
    } else {
        const double f = std::get<double>(value_);
        if (!(f > 0.0 && f < 1.0)) {
            throw ConfigError("train fraction must lie in (0, 1), got " + std::to_string(f));
        }
        train = static_cast<std::size_t>(std::llround(f * static_cast<double>(n_samples)));
    }
    if (train < 1 || train + 1 > n_samples) {
        throw ConfigError("train count " + std::to_string(train) + " invalid for " +
                          std::to_string(n_samples) + " samples (need 1..n-1)");
    }
    return train;
}

std::pair<SupervisedMatrix, SupervisedMatrix> split(const SupervisedMatrix& m, const SplitSpec& spec) {
    const std::size_t n_train = spec.resolve(m.rows());
    return {slice_rows(m, 0, n_train), slice_rows(m, n_train, m.rows())};
}

Column areal_rainfall(const TimeSeriesTable& table, std::optional<std::span<const double>> weights) {
    std::vector<double> w(kRainStations, 1.0 / static_cast<double>(kRainStations));
    if (weights) {
        if (weights->size() != kRainStations) {
            throw ConfigError("areal rainfall needs " + std::to_string(kRainStations) +
                              " weights, got " + std::to_string(weights->size()));
        }
        double sum = 0.0;
        for (double x : *weights) {
            if (!(x >= 0.0) || !std::isfinite(x)) throw ConfigError("areal weights must be >= 0");
            sum += x;
        }
        if (std::abs(sum - 1.0) > 1e-9) {
            throw ConfigError("areal weights must sum to 1, got " + std::to_string(sum));
        }
        w.assign(weights->begin(), weights->end());
    }
    std::vector<const std::vector<double>*> rain;
    for (std::size_t s = 1; s <= kRainStations; ++s) {
        rain.push_back(&table.column(rain_column_name(s)).values);
    }
    Column out{std::string(kArealColumn), std::vector<double>(table.size(), 0.0)};
    for (std::size_t t = 0; t < table.size(); ++t) {
        double acc = 0.0;
        for (std::size_t s = 0; s < kRainStations; ++s) acc += w[s] * (*rain[s])[t];
        out.values[t] = acc;
    }
    return out;
}

}  // namespace flowcast
