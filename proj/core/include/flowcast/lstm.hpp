#pragma once

// Single-layer LSTM with a linear readout on the last hidden state.
//
//   forget    g_t  = sigmoid(U_g x_t + W_g h_{t-1} + b_g)
//   input     i_t  = sigmoid(U_i x_t + W_i h_{t-1} + b_i)
//   candidate c~_t = tanh   (U_c x_t + W_c h_{t-1} + b_c)
//   output    o_t  = sigmoid(U_o x_t + W_o h_{t-1} + b_o)
//   c_t = g_t * c_{t-1} + i_t * c~_t
//   h_t = o_t * tanh(c_t)
//   prediction = V^T h_T + b_out
//
// U_* are hidden x input and W_* hidden x hidden, so the products read as written.

#include <span>
#include <vector>

#include "flowcast/numcore.hpp"
#include "flowcast/params.hpp"

namespace flowcast {

struct GateParams {
    Matrix input_weights;      // hidden x input
    Matrix recurrent_weights;  // hidden x hidden
    Vector bias;               // hidden
};

struct LstmParams {
    GateParams forget;
    GateParams input;
    GateParams candidate;
    GateParams output;
    Matrix readout_weights;  // hidden x 1
    Vector readout_bias;     // 1
    std::size_t encoder_steps = 1;

    static LstmParams zeros(std::size_t input_size, std::size_t hidden_size,
                            std::size_t encoder_steps);
    /// Gate and readout weights from `rule`; biases start at zero.
    static LstmParams init(Rng& rng, std::size_t input_size, std::size_t hidden_size,
                           std::size_t encoder_steps, const ScaleRule& rule = Glorot{});

    std::size_t input_size() const noexcept { return forget.input_weights.cols(); }
    std::size_t hidden_size() const noexcept { return forget.input_weights.rows(); }

    /// All four gates must share shapes; readout must be hidden x 1.
    void validate() const;

    std::vector<ParamBlock> blocks();
    std::vector<ConstParamBlock> blocks() const;
};

struct LstmState {
    Vector h;
    Vector c;

    static LstmState zeros(std::size_t hidden_size) {
        return {Vector(hidden_size), Vector(hidden_size)};
    }
};

/// Gate activations recorded by one cell step.
struct LstmGateTrace {
    Vector forget;
    Vector input;
    Vector candidate;
    Vector output;
    Vector cell;
};

struct LstmStep {
    LstmState state;
    LstmGateTrace gates;
};

LstmStep lstm_cell_forward(const LstmParams& params, std::span<const double> x,
                           const LstmState& prev);

/// Everything backpropagation through time needs, one row per step.
struct LstmTrace {
    Matrix inputs;     // steps x input
    Matrix forget;     // steps x hidden
    Matrix input;      // steps x hidden
    Matrix candidate;  // steps x hidden
    Matrix output;     // steps x hidden
    Matrix cell;       // (steps + 1) x hidden, row 0 is the initial state
    Matrix cell_tanh;  // steps x hidden
    Matrix hidden;     // (steps + 1) x hidden, row 0 is the initial state
    double prediction = 0.0;

    std::size_t steps() const noexcept { return inputs.rows(); }
};

/// Runs the window from a zero state. Throws ShapeError unless the window has
/// exactly encoder_steps vectors of input_size values.
LstmTrace lstm_sequence_forward(const LstmParams& params, std::span<const Vector> window);
/// Same, for a time-major flat window of encoder_steps * input_size values.
LstmTrace lstm_sequence_forward(const LstmParams& params, std::span<const double> features);
double lstm_predict(const LstmParams& params, std::span<const double> features);

/// Adds d_prediction * d(prediction)/d(theta) to `grads` for every parameter.
void lstm_backward(const LstmParams& params, const LstmTrace& trace, double d_prediction,
                   LstmParams& grads);
/// Fresh gradient set.
LstmParams lstm_backward(const LstmParams& params, const LstmTrace& trace, double d_prediction);

// Hooks for the generic trainer.
LstmParams zeros_like(const LstmParams& p);
double forward_predict(const LstmParams& p, std::span<const double> features);
void accumulate_gradient(const LstmParams& p, std::span<const double> features, double d_prediction,
                         LstmParams& grads);
inline std::vector<ParamBlock> param_blocks(LstmParams& p) { return p.blocks(); }

}  // namespace flowcast
