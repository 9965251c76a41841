#pragma once

// Vanilla recurrent cell:
//   h_t = act_h(W^T h_{t-1} + U^T x_t)
//   y_t = act_o(V^T h_t)

#include <span>
#include <vector>

#include "flowcast/numcore.hpp"
#include "flowcast/params.hpp"

namespace flowcast {

struct RnnParams {
    Matrix recurrent_weights;  // W, hidden x hidden
    Matrix input_weights;      // U, input x hidden
    Matrix output_weights;     // V, hidden x output
    Activation hidden_activation = Activation::Tanh;
    Activation output_activation = Activation::Identity;
    std::size_t encoder_steps = 1;

    static RnnParams zeros(std::size_t input_size, std::size_t hidden_size,
                           std::size_t encoder_steps, std::size_t output_size = 1);
    static RnnParams init(Rng& rng, std::size_t input_size, std::size_t hidden_size,
                          std::size_t encoder_steps, const ScaleRule& rule = Glorot{});

    std::size_t input_size() const noexcept { return input_weights.rows(); }
    std::size_t hidden_size() const noexcept { return recurrent_weights.rows(); }
    std::size_t output_size() const noexcept { return output_weights.cols(); }

    /// Throws ShapeError when the three matrices disagree.
    void validate() const;

    std::vector<ParamBlock> blocks();
    std::vector<ConstParamBlock> blocks() const;
};

struct RnnStep {
    Vector hidden;
    Vector output;
};

RnnStep rnn_cell_forward(const RnnParams& params, std::span<const double> x,
                         std::span<const double> h_prev);

struct RnnTrace {
    std::vector<Vector> inputs;
    std::vector<Vector> hidden;  // hidden[0] is the zero initial state
    Vector output;               // act_o(V^T h_T)
    double prediction = 0.0;     // output[0]
};

/// Runs the cell over a time-major flat window (encoder_steps * input_size values)
/// from a zero state; the forecast is the first output of the last step.
RnnTrace rnn_sequence_forward(const RnnParams& params, std::span<const double> features);
double rnn_predict(const RnnParams& params, std::span<const double> features);

/// Accumulates d_prediction * d(prediction)/d(params) into `grads`.
void rnn_backward(const RnnParams& params, const RnnTrace& trace, double d_prediction,
                  RnnParams& grads);

// Hooks for the generic trainer.
RnnParams zeros_like(const RnnParams& p);
double forward_predict(const RnnParams& p, std::span<const double> features);
void accumulate_gradient(const RnnParams& p, std::span<const double> features, double d_prediction,
                         RnnParams& grads);
inline std::vector<ParamBlock> param_blocks(RnnParams& p) { return p.blocks(); }

}  // namespace flowcast
