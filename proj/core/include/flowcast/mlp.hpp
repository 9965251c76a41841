#pragma once

// One-hidden-layer perceptron on the flat feature vector:
//   y = W2^T act(W1^T x + b1) + b2

#include <span>
#include <vector>

#include "flowcast/numcore.hpp"
#include "flowcast/params.hpp"

namespace flowcast {

struct MlpParams {
    Matrix hidden_weights;  // input x hidden
    Vector hidden_bias;     // hidden
    Matrix output_weights;  // hidden x 1
    Vector output_bias;     // 1
    Activation hidden_activation = Activation::Tanh;

    static MlpParams zeros(std::size_t input_size, std::size_t hidden_size,
                           Activation activation = Activation::Tanh);
    static MlpParams init(Rng& rng, std::size_t input_size, std::size_t hidden_size,
                          Activation activation = Activation::Tanh,
                          const ScaleRule& rule = Glorot{});

    std::size_t input_size() const noexcept { return hidden_weights.rows(); }
    std::size_t hidden_size() const noexcept { return hidden_weights.cols(); }

    void validate() const;

    std::vector<ParamBlock> blocks();
    std::vector<ConstParamBlock> blocks() const;
};

double mlp_forward(const MlpParams& params, std::span<const double> features);

/// Adds d_output * d(output)/d(theta) to `grads`.
void mlp_backward(const MlpParams& params, std::span<const double> features, double d_output,
                  MlpParams& grads);

MlpParams zeros_like(const MlpParams& p);
inline double forward_predict(const MlpParams& p, std::span<const double> features) {
    return mlp_forward(p, features);
}
inline void accumulate_gradient(const MlpParams& p, std::span<const double> features,
                                double d_prediction, MlpParams& grads) {
    mlp_backward(p, features, d_prediction, grads);
}
inline std::vector<ParamBlock> param_blocks(MlpParams& p) { return p.blocks(); }

}  // namespace flowcast
