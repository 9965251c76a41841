#include <doctest.h>

#include <cmath>

#include "flowcast/lstm.hpp"
#include "flowcast/mlp.hpp"
#include "flowcast/rnn.hpp"
#include "flowcast/training.hpp"
#include "oracles.hpp"

using namespace flowcast;

namespace {

LstmParams random_lstm(Rng& rng, std::size_t in, std::size_t hidden, std::size_t steps, double scale = 0.8) {
    auto p = LstmParams::init(rng, in, hidden, steps, FixedRange{-scale, scale});
    for (auto* g : {&p.forget, &p.input, &p.candidate, &p.output}) {
        for (auto& b : g->bias) b = rng.uniform(-0.5, 0.5);
    }
    p.readout_bias[0] = rng.uniform(-0.5, 0.5);
    return p;
}

std::vector<double> random_vec(Rng& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(lo, hi);
    return v;
}

Matrix random_rows(Rng& rng, std::size_t rows, std::size_t cols) {
    Matrix m(rows, cols);
    for (auto& v : m.span()) v = rng.uniform(0.0, 1.0);
    return m;
}

}  // namespace

// ---------------------------------------------------------------------------
// LSTM

TEST_CASE("LSTM cell with zero parameters") {
    auto p = LstmParams::zeros(1, 1, 1);
    const auto step = lstm_cell_forward(p, std::vector<double>{0.3}, LstmState::zeros(1));
    CHECK(step.gates.forget[0] == 0.5);
    CHECK(step.gates.input[0] == 0.5);
    CHECK(step.gates.output[0] == 0.5);
    CHECK(step.gates.candidate[0] == 0.0);
    CHECK(step.state.c[0] == 0.0);
    CHECK(step.state.h[0] == 0.0);

    LstmState prev = LstmState::zeros(1);
    prev.c[0] = 2.0;
    const auto halved = lstm_cell_forward(p, std::vector<double>{5.0}, prev);
    CHECK(halved.state.c[0] == 1.0);
    CHECK(halved.state.h[0] == doctest::Approx(0.5 * std::tanh(1.0)).epsilon(1e-15));
}

TEST_CASE("LSTM cell matches the scalar oracle") {
    Rng rng(2024);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t in = 1 + rng.below(5), hidden = 1 + rng.below(5);
        const auto p = random_lstm(rng, in, hidden, 1, 1.5);
        const auto x = random_vec(rng, in, -2, 2);
        LstmState prev{Vector(random_vec(rng, hidden)), Vector(random_vec(rng, hidden, -2, 2))};
        const auto got = lstm_cell_forward(p, x, prev);
        const auto ref = oracle::lstm_cell(p, x, prev.h.values(), prev.c.values());
        for (std::size_t k = 0; k < hidden; ++k) {
            CHECK(std::abs(got.gates.forget[k] - ref.g[k]) <= 1e-12);
            CHECK(std::abs(got.gates.input[k] - ref.i[k]) <= 1e-12);
            CHECK(std::abs(got.gates.candidate[k] - ref.cand[k]) <= 1e-12);
            CHECK(std::abs(got.gates.output[k] - ref.o[k]) <= 1e-12);
            CHECK(std::abs(got.state.c[k] - ref.c[k]) <= 1e-12);
            CHECK(std::abs(got.state.h[k] - ref.h[k]) <= 1e-12);
        }
    }
}

TEST_CASE("LSTM cell rejects mismatched shapes") {
    const auto p = LstmParams::zeros(3, 2, 1);
    CHECK_THROWS_AS(lstm_cell_forward(p, std::vector<double>{1.0}, LstmState::zeros(2)), ShapeError);
    CHECK_THROWS_AS(lstm_cell_forward(p, std::vector<double>{1, 2, 3}, LstmState::zeros(3)), ShapeError);
}

TEST_CASE("LSTM gate activations stay in their open ranges") {
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const auto p = random_lstm(rng, 3, 4, 5, 20.0);
        const auto x = random_vec(rng, 15, -50, 50);
        const auto tr = lstm_sequence_forward(p, std::span<const double>(x));
        for (const Matrix* m : {&tr.forget, &tr.input, &tr.output}) {
            for (double v : m->values()) {
                CHECK(v > 0.0);
                CHECK(v < 1.0);
            }
        }
        for (double v : tr.candidate.values()) {
            CHECK(v > -1.0);
            CHECK(v < 1.0);
        }
    }
}

TEST_CASE("LSTM cell state contracts when the input gate is closed") {
    Rng rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        auto p = random_lstm(rng, 2, 3, 1);
        // Driving the input-gate bias far negative saturates i_t at its lower clamp.
        for (auto& b : p.input.bias) b = -800.0;
        LstmState prev{Vector(random_vec(rng, 3)), Vector(random_vec(rng, 3, -3, 3))};
        const auto step = lstm_cell_forward(p, random_vec(rng, 2), prev);
        for (std::size_t k = 0; k < 3; ++k) CHECK(std::abs(step.state.c[k]) <= std::abs(prev.c[k]));
    }
}

TEST_CASE("LSTM sequence forward") {
    Rng rng(5);
    SUBCASE("one step is one cell plus readout") {
        const auto p = random_lstm(rng, 2, 3, 1);
        const auto x = random_vec(rng, 2);
        const auto step = lstm_cell_forward(p, x, LstmState::zeros(3));
        double y = p.readout_bias[0];
        for (std::size_t k = 0; k < 3; ++k) y += p.readout_weights(k, 0) * step.state.h[k];
        CHECK(lstm_predict(p, x) == doctest::Approx(y).epsilon(1e-15));
    }
    SUBCASE("zero readout weights leave only the bias") {
        auto p = random_lstm(rng, 2, 3, 4);
        p.readout_weights.fill(0.0);
        CHECK(lstm_predict(p, random_vec(rng, 8)) == p.readout_bias[0]);
        CHECK(lstm_predict(p, random_vec(rng, 8)) == p.readout_bias[0]);
    }
    SUBCASE("three steps fold the oracle cell") {
        const auto p = random_lstm(rng, 4, 2, 3);
        const auto x = random_vec(rng, 12);
        CHECK(std::abs(lstm_predict(p, x) - oracle::lstm_sequence(p, x)) <= 1e-12);
        std::vector<Vector> window{Vector{x[0], x[1], x[2], x[3]}, Vector{x[4], x[5], x[6], x[7]},
                                   Vector{x[8], x[9], x[10], x[11]}};
        CHECK(lstm_sequence_forward(p, std::span<const Vector>(window)).prediction == lstm_predict(p, x));
    }
    SUBCASE("wrong window length is a shape error") {
        const auto p = random_lstm(rng, 2, 2, 3);
        CHECK_THROWS_AS(lstm_predict(p, random_vec(rng, 5)), ShapeError);
        std::vector<Vector> two{Vector(2), Vector(2)};
        CHECK_THROWS_AS(lstm_sequence_forward(p, std::span<const Vector>(two)), ShapeError);
    }
    SUBCASE("forward is bit-for-bit deterministic") {
        const auto p = random_lstm(rng, 3, 5, 6);
        const auto x = random_vec(rng, 18);
        CHECK(lstm_predict(p, x) == lstm_predict(p, x));
    }
}

TEST_CASE("LSTM backward basics") {
    Rng rng(12);
    const auto p = random_lstm(rng, 3, 4, 3);
    const auto x = random_vec(rng, 9);
    const auto tr = lstm_sequence_forward(p, std::span<const double>(x));

    const auto zero = lstm_backward(p, tr, 0.0);
    for (const auto& b : zero.blocks()) {
        for (double v : b.values) CHECK(v == 0.0);
    }
    const auto g = lstm_backward(p, tr, 0.37);
    CHECK(g.readout_bias[0] == 0.37);
    for (std::size_t k = 0; k < 4; ++k) CHECK(g.readout_weights(k, 0) == doctest::Approx(0.37 * tr.hidden(3, k)));
}

TEST_CASE("LSTM gradients match central differences") {
    Rng rng(99);
    for (int trial = 0; trial < 6; ++trial) {
        const std::size_t in = 1 + rng.below(4), hidden = 1 + rng.below(5), steps = 1 + rng.below(5);
        const auto p = random_lstm(rng, in, hidden, steps);
        const auto x = random_rows(rng, 3, in * steps);
        const Vector y(random_vec(rng, 3));
        CHECK(oracle::fd_max_relative_error(p, x, y, oracle::lstm_sequence<long double>, 1e-6) < 1e-5);
        // The library's own double-precision checker, at the looser invariant bound.
        const auto report = gradient_check(p, x, y, LossKind::Mse, 1e-6);
        CHECK_MESSAGE(report.max_relative_error < 1e-4, report.worst_block, "[", report.worst_index,
                      "] analytic ", report.analytic, " numeric ", report.numeric);
        CHECK(report.checked == total_size(zeros_like(p).blocks()));
    }
}

TEST_CASE("LSTM fused and generic gradients agree") {
    Rng rng(4);
    const auto p = random_lstm(rng, 2, 3, 4);
    const auto x = random_vec(rng, 8);
    auto a = zeros_like(p);
    accumulate_gradient(p, x, 0.7, a);
    const auto b = lstm_backward(p, lstm_sequence_forward(p, std::span<const double>(x)), 0.7);
    CHECK(flatten(a.blocks()) == flatten(const_cast<LstmParams&>(b).blocks()));
}

TEST_CASE("LstmParams validation and initialisation") {
    Rng rng(1);
    auto p = LstmParams::init(rng, 12, 64, 12);
    CHECK(p.hidden_size() == 64);
    CHECK(p.input_size() == 12);
    CHECK(p.forget.bias[0] == 0.0);
    CHECK_NOTHROW(p.validate());
    p.output.recurrent_weights = Matrix(3, 3);
    CHECK_THROWS_AS(p.validate(), ShapeError);
    CHECK_THROWS(LstmParams::zeros(2, 0, 1));
}

// ---------------------------------------------------------------------------
// RNN

TEST_CASE("RNN cell examples") {
    auto p = RnnParams::zeros(1, 1, 1);
    p.input_weights(0, 0) = 1.0;
    const auto step = rnn_cell_forward(p, std::vector<double>{0.5}, std::vector<double>{0.9});
    CHECK(step.hidden[0] == std::tanh(0.5));

    const auto zero = rnn_cell_forward(RnnParams::zeros(2, 3, 1), std::vector<double>{1, 2}, std::vector<double>{1, 1, 1});
    for (double h : zero.hidden) CHECK(h == 0.0);
    CHECK_THROWS_AS(rnn_cell_forward(p, std::vector<double>{1, 2}, std::vector<double>{0}), ShapeError);
}

TEST_CASE("RNN cell matches the scalar oracle") {
    Rng rng(77);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t in = 1 + rng.below(4), hidden = 1 + rng.below(4);
        auto p = RnnParams::init(rng, in, hidden, 1, FixedRange{-1.5, 1.5});
        p.hidden_activation = trial % 2 ? Activation::Tanh : Activation::Sigmoid;
        p.output_activation = trial % 3 == 0 ? Activation::Identity : (trial % 3 == 1 ? Activation::Tanh : Activation::Sigmoid);
        const auto x = random_vec(rng, in, -2, 2);
        const auto h = random_vec(rng, hidden);
        const auto got = rnn_cell_forward(p, x, h);
        const auto ref = oracle::rnn_cell(p, x, h);
        for (std::size_t k = 0; k < hidden; ++k) CHECK(std::abs(got.hidden[k] - ref.h[k]) <= 1e-12);
        CHECK(std::abs(got.output[0] - ref.y[0]) <= 1e-12);
    }
}

TEST_CASE("RNN gradients match central differences") {
    Rng rng(8);
    for (int trial = 0; trial < 5; ++trial) {
        const std::size_t in = 1 + rng.below(3), hidden = 1 + rng.below(5), steps = 1 + rng.below(5);
        const auto p = RnnParams::init(rng, in, hidden, steps, FixedRange{-0.8, 0.8});
        const auto x = random_rows(rng, 4, in * steps);
        const Vector y(random_vec(rng, 4));
        const auto report = gradient_check(p, x, y);
        CHECK_MESSAGE(report.max_relative_error < 1e-4, report.worst_block);
    }
}

// ---------------------------------------------------------------------------
// MLP

TEST_CASE("MLP forward examples") {
    auto zero = MlpParams::zeros(3, 4);
    zero.output_bias[0] = 1.25;
    CHECK(mlp_forward(zero, std::vector<double>{1, 2, 3}) == 1.25);

    auto one = MlpParams::zeros(1, 1, Activation::Tanh);
    one.hidden_weights(0, 0) = 1.0;
    one.output_weights(0, 0) = 2.0;
    one.output_bias[0] = -0.5;
    CHECK(mlp_forward(one, std::vector<double>{0.3}) == doctest::Approx(std::tanh(0.3) * 2.0 - 0.5).epsilon(1e-15));
    CHECK_THROWS_AS(mlp_forward(one, std::vector<double>{0.3, 0.1}), ShapeError);
}

TEST_CASE("MLP gradients match central differences") {
    Rng rng(3);
    for (Activation act : {Activation::Tanh, Activation::Sigmoid, Activation::Identity}) {
        const auto p = MlpParams::init(rng, 5, 6, act, FixedRange{-1.0, 1.0});
        const auto x = random_rows(rng, 4, 5);
        const Vector y(random_vec(rng, 4));
        const auto report = gradient_check(p, x, y);
        CHECK_MESSAGE(report.max_relative_error < 1e-6, to_string(act), " ", report.worst_block);
    }
}
