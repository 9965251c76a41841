#include "flowcast/mlp.hpp"

namespace flowcast {

MlpParams MlpParams::zeros(std::size_t input_size, std::size_t hidden_size, Activation activation) {
    if (input_size == 0 || hidden_size == 0) throw ConfigError("MLP dimensions must be >= 1");
    MlpParams p;
    p.hidden_weights = Matrix(input_size, hidden_size);
    p.hidden_bias = Vector(hidden_size);
    p.output_weights = Matrix(hidden_size, 1);
    p.output_bias = Vector(1);
    p.hidden_activation = activation;
    return p;
}

MlpParams MlpParams::init(Rng& rng, std::size_t input_size, std::size_t hidden_size,
                          Activation activation, const ScaleRule& rule) {
    MlpParams p = zeros(input_size, hidden_size, activation);
    p.hidden_weights = init_uniform(rng, input_size, hidden_size, rule);
    p.output_weights = init_uniform(rng, hidden_size, 1, rule);
    return p;
}

void MlpParams::validate() const {
    const std::size_t h = hidden_weights.cols();
    if (h == 0 || hidden_weights.rows() == 0 || hidden_bias.size() != h ||
        output_weights.rows() != h || output_weights.cols() != 1 || output_bias.size() != 1) {
        throw ShapeError("inconsistent MLP shapes: W1 " + hidden_weights.shape_string() + ", W2 " +
                         output_weights.shape_string());
    }
}

std::vector<ParamBlock> MlpParams::blocks() {
    return {{"W1", hidden_weights.span()},
            {"b1", hidden_bias.span()},
            {"W2", output_weights.span()},
            {"b2", output_bias.span()}};
}

std::vector<ConstParamBlock> MlpParams::blocks() const {
    return {{"W1", hidden_weights.span()},
            {"b1", hidden_bias.span()},
            {"W2", output_weights.span()},
            {"b2", output_bias.span()}};
}

namespace {

Vector hidden_layer(const MlpParams& p, std::span<const double> x) {
    p.validate();
    if (x.size() != p.input_size()) {
        throw ShapeError("MLP expects " + std::to_string(p.input_size()) + " features, got " +
                         std::to_string(x.size()));
    }
    Vector a = p.hidden_bias;
    matvec_transposed_accumulate(p.hidden_weights, x, a.span());
    for (auto& v : a) v = activate(p.hidden_activation, v);
    return a;
}

}  // namespace

double mlp_forward(const MlpParams& params, std::span<const double> features) {
    const Vector a = hidden_layer(params, features);
    return dot(params.output_weights.span(), a.span()) + params.output_bias[0];
}

void mlp_backward(const MlpParams& params, std::span<const double> features, double d_output,
                  MlpParams& grads) {
    const Vector a = hidden_layer(params, features);
    const std::size_t h = params.hidden_size();
    Vector dz(h);
    for (std::size_t k = 0; k < h; ++k) {
        grads.output_weights(k, 0) += a[k] * d_output;
        dz[k] = params.output_weights(k, 0) * d_output *
                activation_derivative(params.hidden_activation, a[k]);
        grads.hidden_bias[k] += dz[k];
    }
    grads.output_bias[0] += d_output;
    add_outer(grads.hidden_weights, features, dz.span());
}

MlpParams zeros_like(const MlpParams& p) {
    return MlpParams::zeros(p.input_size(), p.hidden_size(), p.hidden_activation);
}

}  // namespace flowcast
