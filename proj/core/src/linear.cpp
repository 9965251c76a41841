#include "flowcast/linear.hpp"

namespace flowcast {

LinearParams LinearParams::zeros(std::size_t input_size) {
    if (input_size == 0) throw ConfigError("linear model needs at least one feature");
    return {Vector(input_size), Vector(1)};
}

std::vector<ParamBlock> LinearParams::blocks() {
    return {{"w", weights.span()}, {"b", bias.span()}};
}

std::vector<ConstParamBlock> LinearParams::blocks() const {
    return {{"w", weights.span()}, {"b", bias.span()}};
}

LinearParams zeros_like(const LinearParams& p) { return LinearParams::zeros(p.input_size()); }

double forward_predict(const LinearParams& p, std::span<const double> features) {
    if (features.size() != p.input_size()) {
        throw ShapeError("linear model expects " + std::to_string(p.input_size()) +
                         " features, got " + std::to_string(features.size()));
    }
    return dot(p.weights.span(), features) + p.bias[0];
}

void accumulate_gradient(const LinearParams& p, std::span<const double> features,
                         double d_prediction, LinearParams& grads) {
    if (features.size() != p.input_size()) throw ShapeError("linear gradient: feature length");
    for (std::size_t i = 0; i < features.size(); ++i) grads.weights[i] += features[i] * d_prediction;
    grads.bias[0] += d_prediction;
}

}  // namespace flowcast
