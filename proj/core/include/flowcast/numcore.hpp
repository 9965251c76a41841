#pragma once

// Dense row-major linear algebra, activations and a portable seeded RNG.

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "flowcast/errors.hpp"

namespace flowcast {

class Vector {
public:
    Vector() = default;
    explicit Vector(std::size_t len, double fill = 0.0) : data_(len, fill) {}
    Vector(std::initializer_list<double> values) : data_(values) {}
    explicit Vector(std::vector<double> values) : data_(std::move(values)) {}
    explicit Vector(std::span<const double> values) : data_(values.begin(), values.end()) {}

    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator[](std::size_t i) noexcept { return data_[i]; }
    double operator[](std::size_t i) const noexcept { return data_[i]; }

    double* data() noexcept { return data_.data(); }
    const double* data() const noexcept { return data_.data(); }
    auto begin() noexcept { return data_.begin(); }
    auto end() noexcept { return data_.end(); }
    auto begin() const noexcept { return data_.begin(); }
    auto end() const noexcept { return data_.end(); }

    std::span<double> span() noexcept { return data_; }
    std::span<const double> span() const noexcept { return data_; }
    operator std::span<const double>() const noexcept { return data_; }

    const std::vector<double>& values() const noexcept { return data_; }

    void fill(double value);

    friend bool operator==(const Vector&, const Vector&) = default;

private:
    std::vector<double> data_;
};

class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    /// Adopts row-major `data`; throws ShapeError when its length is not rows*cols.
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    static Matrix identity(std::size_t n);
    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const noexcept {
        return {data_.data() + r * cols_, cols_};
    }

    std::span<double> span() noexcept { return data_; }
    std::span<const double> span() const noexcept { return data_; }
    const std::vector<double>& values() const noexcept { return data_; }

    void fill(double value);
    std::string shape_string() const;

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Standard product a*b. Throws ShapeError naming both shapes on mismatch and
/// NumericError if the product overflows.
Matrix matmul(const Matrix& a, const Matrix& b);

/// a * x
Vector matvec(const Matrix& a, std::span<const double> x);
/// a^T * x
Vector matvec_transposed(const Matrix& a, std::span<const double> x);

/// out += a * x, without allocation.
void matvec_accumulate(const Matrix& a, std::span<const double> x, std::span<double> out);
/// out += a^T * x, without allocation.
void matvec_transposed_accumulate(const Matrix& a, std::span<const double> x,
                                  std::span<double> out);
/// a += scale * u * v^T
void add_outer(Matrix& a, std::span<const double> u, std::span<const double> v, double scale = 1.0);

/// Fixed-order dot product (four interleaved partial sums, combined left to right).
double dot(std::span<const double> a, std::span<const double> b);

/// Logistic function, clamped into the open interval (0, 1).
double sigmoid(double x) noexcept;
Vector sigmoid(const Vector& v);

/// Hyperbolic tangent, clamped into the open interval (-1, 1).
double tanh_act(double x) noexcept;
Vector tanh_act(const Vector& v);

/// Seeded generator with a platform-independent draw sequence.
///
/// The engine is std::mt19937_64, whose output is fixed by the standard. The
/// standard library distributions are not, so every derived draw (uniform,
/// normal, bounded integer, shuffle) is implemented here.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi);
    /// Standard normal via Box-Muller (no cached second value).
    double normal();
    double normal(double mean, double stddev) { return mean + stddev * normal(); }
    /// Exponential with the given mean.
    double exponential(double mean);
    /// Unbiased integer in [0, n).
    std::size_t below(std::size_t n);

    template <class T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = below(i);
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

struct Glorot {};
struct FixedRange {
    double lo = 0.0;
    double hi = 0.0;
};
using ScaleRule = std::variant<Glorot, FixedRange>;

/// Uniform random matrix. Glorot draws from U(-sqrt(6/(rows+cols)), +sqrt(6/(rows+cols))).
Matrix init_uniform(Rng& rng, std::size_t rows, std::size_t cols, const ScaleRule& rule = Glorot{});

/// FNV-1a over the raw bytes of the values; used to fingerprint datasets.
std::uint64_t fingerprint(std::span<const double> values, std::uint64_t seed = 1469598103934665603ULL);

bool all_finite(std::span<const double> values) noexcept;

}  // namespace flowcast
