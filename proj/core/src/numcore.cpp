#include "flowcast/numcore.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numbers>
#include <sstream>

namespace flowcast {

void Vector::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        std::ostringstream msg;
        msg << "matrix data length " << data_.size() << " does not match shape " << rows_ << "x"
            << cols_;
        throw ShapeError(msg.str());
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t n_rows = rows.size();
    const std::size_t n_cols = n_rows == 0 ? 0 : rows.begin()->size();
    std::vector<double> data;
    data.reserve(n_rows * n_cols);
    for (const auto& r : rows) {
        if (r.size() != n_cols) throw ShapeError("ragged row list");
        data.insert(data.end(), r.begin(), r.end());
    }
    return Matrix(n_rows, n_cols, std::move(data));
}

void Matrix::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

std::string Matrix::shape_string() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul: cannot multiply " + a.shape_string() + " by " +
                         b.shape_string());
    }
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto out_row = out.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            const auto b_row = b.row(k);
            for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aik * b_row[j];
        }
    }
    if (!all_finite(out.span())) throw NumericError("matmul: product overflowed");
    return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = a.size();
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    for (; i < n; ++i) s0 += a[i] * b[i];
    return (s0 + s1) + (s2 + s3);
}

void matvec_accumulate(const Matrix& a, std::span<const double> x, std::span<double> out) {
    if (a.cols() != x.size() || a.rows() != out.size()) {
        throw ShapeError("matvec: matrix " + a.shape_string() + " with vector of length " +
                         std::to_string(x.size()) + " into length " + std::to_string(out.size()));
    }
    for (std::size_t r = 0; r < a.rows(); ++r) out[r] += dot(a.row(r), x);
}

void matvec_transposed_accumulate(const Matrix& a, std::span<const double> x,
                                  std::span<double> out) {
    if (a.rows() != x.size() || a.cols() != out.size()) {
        throw ShapeError("matvec^T: matrix " + a.shape_string() + " transposed with vector of length " +
                         std::to_string(x.size()) + " into length " + std::to_string(out.size()));
    }
    for (std::size_t r = 0; r < a.rows(); ++r) {
        const double xr = x[r];
        if (xr == 0.0) continue;
        const auto row = a.row(r);
        for (std::size_t c = 0; c < a.cols(); ++c) out[c] += row[c] * xr;
    }
}

Vector matvec(const Matrix& a, std::span<const double> x) {
    Vector out(a.rows());
    matvec_accumulate(a, x, out.span());
    return out;
}

Vector matvec_transposed(const Matrix& a, std::span<const double> x) {
    Vector out(a.cols());
    matvec_transposed_accumulate(a, x, out.span());
    return out;
}

void add_outer(Matrix& a, std::span<const double> u, std::span<const double> v, double scale) {
    if (a.rows() != u.size() || a.cols() != v.size()) {
        throw ShapeError("add_outer: " + a.shape_string() + " vs " + std::to_string(u.size()) +
                         "x" + std::to_string(v.size()));
    }
    for (std::size_t r = 0; r < a.rows(); ++r) {
        const double ur = u[r] * scale;
        if (ur == 0.0) continue;
        auto row = a.row(r);
        for (std::size_t c = 0; c < a.cols(); ++c) row[c] += ur * v[c];
    }
}

namespace {
constexpr double kUnitLow = std::numeric_limits<double>::min();
const double kUnitHigh = std::nextafter(1.0, 0.0);
const double kSignedHigh = std::nextafter(1.0, 0.0);
}  // namespace

double sigmoid(double x) noexcept {
    double y;
    if (x >= 0.0) {
        y = 1.0 / (1.0 + std::exp(-x));
    } else {
        const double e = std::exp(x);
        y = e / (1.0 + e);
    }
    return std::clamp(y, kUnitLow, kUnitHigh);
}

Vector sigmoid(const Vector& v) {
    Vector out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = sigmoid(v[i]);
    return out;
}

double tanh_act(double x) noexcept { return std::clamp(std::tanh(x), -kSignedHigh, kSignedHigh); }

Vector tanh_act(const Vector& v) {
    Vector out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = tanh_act(v[i]);
    return out;
}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() {
    // 1 - u keeps the log argument in (0, 1].
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double Rng::exponential(double mean) { return -mean * std::log(1.0 - uniform()); }

std::size_t Rng::below(std::size_t n) {
    if (n == 0) throw ConfigError("Rng::below requires n > 0");
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t draw;
    do {
        draw = engine_();
    } while (draw >= limit);
    return static_cast<std::size_t>(draw % bound);
}

Matrix init_uniform(Rng& rng, std::size_t rows, std::size_t cols, const ScaleRule& rule) {
    if (rows == 0 || cols == 0) throw ConfigError("init_uniform: rows and cols must be >= 1");
    double lo = 0.0;
    double hi = 0.0;
    if (const auto* range = std::get_if<FixedRange>(&rule)) {
        if (range->lo > range->hi) {
            throw ConfigError("init_uniform: degenerate range lo=" + std::to_string(range->lo) +
                              " > hi=" + std::to_string(range->hi));
        }
        lo = range->lo;
        hi = range->hi;
    } else {
        hi = std::sqrt(6.0 / static_cast<double>(rows + cols));
        lo = -hi;
    }
    Matrix m(rows, cols);
    for (auto& v : m.span()) v = rng.uniform(lo, hi);
    return m;
}

std::uint64_t fingerprint(std::span<const double> values, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (double v : values) {
        unsigned char bytes[sizeof(double)];
        std::memcpy(bytes, &v, sizeof(double));
        for (unsigned char b : bytes) {
            h ^= b;
            h *= 1099511628211ULL;
        }
    }
    return h;
}

bool all_finite(std::span<const double> values) noexcept {
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace flowcast
