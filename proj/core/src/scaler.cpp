#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "flowcast/dataset.hpp"

namespace flowcast {

MinMaxScaler::MinMaxScaler(std::vector<std::string> names, Vector min, Vector max)
    : names_(std::move(names)), min_(std::move(min)), max_(std::move(max)) {
    if (min_.size() != max_.size()) throw ShapeError("scaler min/max length mismatch");
    if (names_.empty()) {
        for (std::size_t i = 0; i < min_.size(); ++i) names_.push_back("c" + std::to_string(i));
    }
    if (names_.size() != min_.size()) throw ShapeError("scaler name count mismatch");
    for (std::size_t i = 0; i < min_.size(); ++i) {
        if (!(min_[i] <= max_[i])) {
            throw ConfigError("scaler column " + names_[i] + ": min exceeds max");
        }
    }
}

MinMaxScaler MinMaxScaler::fit(const Matrix& data, std::vector<std::string> names) {
    if (data.rows() == 0) throw DataError("cannot fit a scaler on zero rows");
    Vector lo(data.cols());
    Vector hi(data.cols());
    for (std::size_t c = 0; c < data.cols(); ++c) {
        lo[c] = data(0, c);
        hi[c] = data(0, c);
    }
    for (std::size_t r = 1; r < data.rows(); ++r) {
        const auto row = data.row(r);
        for (std::size_t c = 0; c < data.cols(); ++c) {
            lo[c] = std::min(lo[c], row[c]);
            hi[c] = std::max(hi[c], row[c]);
        }
    }
    return MinMaxScaler(std::move(names), std::move(lo), std::move(hi));
}

double MinMaxScaler::transform_value(std::size_t column, double x) const noexcept {
    const double range = max_[column] - min_[column];
    if (range < kEpsilonGuard) return 0.0;
    return (x - min_[column]) / range;
}

double MinMaxScaler::inverse_value(std::size_t column, double scaled) const noexcept {
    const double range = max_[column] - min_[column];
    if (range < kEpsilonGuard) return min_[column];
    return scaled * range + min_[column];
}

Matrix MinMaxScaler::transform(const Matrix& data) const {
    if (data.cols() != columns()) {
        throw ShapeError("scaler expects " + std::to_string(columns()) + " columns, got " +
                         std::to_string(data.cols()));
    }
    Matrix out(data.rows(), data.cols());
    for (std::size_t r = 0; r < data.rows(); ++r) {
        for (std::size_t c = 0; c < data.cols(); ++c) out(r, c) = transform_value(c, data(r, c));
    }
    return out;
}

Matrix MinMaxScaler::inverse_transform(const Matrix& scaled) const {
    if (scaled.cols() != columns()) {
        throw ShapeError("scaler expects " + std::to_string(columns()) + " columns, got " +
                         std::to_string(scaled.cols()));
    }
    Matrix out(scaled.rows(), scaled.cols());
    for (std::size_t r = 0; r < scaled.rows(); ++r) {
        for (std::size_t c = 0; c < scaled.cols(); ++c) out(r, c) = inverse_value(c, scaled(r, c));
    }
    return out;
}

void MinMaxScaler::save(std::ostream& out) const {
    char buf[96];
    for (std::size_t i = 0; i < columns(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g", min_[i], max_[i]);
        out << names_[i] << ',' << buf << '\n';
    }
}

MinMaxScaler MinMaxScaler::load(std::istream& in) {
    std::vector<std::string> names;
    std::vector<double> lo;
    std::vector<double> hi;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto c2 = line.rfind(',');
        const auto c1 = c2 == std::string::npos ? std::string::npos : line.rfind(',', c2 - 1);
        if (c1 == std::string::npos || c2 == 0) {
            throw DataError("scaler file line " + std::to_string(line_no) + ": expected name,min,max");
        }
        try {
            std::size_t used = 0;
            const std::string min_text = line.substr(c1 + 1, c2 - c1 - 1);
            const std::string max_text = line.substr(c2 + 1);
            const double mn = std::stod(min_text, &used);
            if (used != min_text.size()) throw std::invalid_argument("min");
            const double mx = std::stod(max_text, &used);
            if (used != max_text.size()) throw std::invalid_argument("max");
            names.push_back(line.substr(0, c1));
            lo.push_back(mn);
            hi.push_back(mx);
        } catch (const std::logic_error&) {
            throw DataError("scaler file line " + std::to_string(line_no) + ": bad number");
        }
    }
    return MinMaxScaler(std::move(names), Vector(std::move(lo)), Vector(std::move(hi)));
}

namespace {

Matrix with_target_column(const SupervisedMatrix& m) {
    Matrix joined(m.rows(), m.n_features() + 1);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        auto dst = joined.row(r);
        const auto src = m.features.row(r);
        std::copy(src.begin(), src.end(), dst.begin());
        dst[m.n_features()] = m.targets[r];
    }
    return joined;
}

SupervisedMatrix apply(const MinMaxScaler& scaler, const SupervisedMatrix& m, bool inverse) {
    if (scaler.columns() != m.n_features() + 1) {
        throw ShapeError("scaler has " + std::to_string(scaler.columns()) +
                         " columns, supervised matrix needs " + std::to_string(m.n_features() + 1));
    }
    SupervisedMatrix out = m;
    const std::size_t target_col = m.n_features();
    for (std::size_t r = 0; r < m.rows(); ++r) {
        auto row = out.features.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) {
            row[c] = inverse ? scaler.inverse_value(c, row[c]) : scaler.transform_value(c, row[c]);
        }
        out.targets[r] = inverse ? scaler.inverse_value(target_col, m.targets[r])
                                 : scaler.transform_value(target_col, m.targets[r]);
    }
    return out;
}

}  // namespace

MinMaxScaler fit_scaler(const SupervisedMatrix& m) {
    std::vector<std::string> names = m.feature_names;
    if (names.size() != m.n_features()) {
        names.clear();
        for (std::size_t i = 0; i < m.n_features(); ++i) names.push_back("f" + std::to_string(i));
    }
    names.push_back(m.target_name.empty() ? "target" : m.target_name);
    return MinMaxScaler::fit(with_target_column(m), std::move(names));
}

SupervisedMatrix transform(const MinMaxScaler& scaler, const SupervisedMatrix& m) {
    return apply(scaler, m, false);
}

SupervisedMatrix inverse_transform(const MinMaxScaler& scaler, const SupervisedMatrix& m) {
    return apply(scaler, m, true);
}

Vector inverse_transform_targets(const MinMaxScaler& scaler, std::span<const double> scaled) {
    if (scaler.columns() == 0) throw ShapeError("empty scaler");
    const std::size_t col = scaler.columns() - 1;
    Vector out(scaled.size());
    for (std::size_t i = 0; i < scaled.size(); ++i) out[i] = scaler.inverse_value(col, scaled[i]);
    return out;
}

}  // namespace flowcast
