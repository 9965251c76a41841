#include "flowcast/params.hpp"

#include <algorithm>

namespace flowcast {

std::string_view to_string(Activation a) noexcept {
    switch (a) {
        case Activation::Identity: return "identity";
        case Activation::Tanh: return "tanh";
        case Activation::Sigmoid: return "sigmoid";
        case Activation::Relu: return "relu";
    }
    return "identity";
}

Activation parse_activation(std::string_view text) {
    if (text == "identity" || text == "linear") return Activation::Identity;
    if (text == "tanh") return Activation::Tanh;
    if (text == "sigmoid") return Activation::Sigmoid;
    if (text == "relu") return Activation::Relu;
    throw ConfigError("unknown activation '" + std::string(text) + "'");
}

double activate(Activation a, double x) noexcept {
    switch (a) {
        case Activation::Identity: return x;
        case Activation::Tanh: return tanh_act(x);
        case Activation::Sigmoid: return sigmoid(x);
        case Activation::Relu: return x > 0.0 ? x : 0.0;
    }
    return x;
}

double activation_derivative(Activation a, double y) noexcept {
    switch (a) {
        case Activation::Identity: return 1.0;
        case Activation::Tanh: return 1.0 - y * y;
        case Activation::Sigmoid: return y * (1.0 - y);
        case Activation::Relu: return y > 0.0 ? 1.0 : 0.0;
    }
    return 1.0;
}

std::size_t total_size(std::span<const ParamBlock> blocks) noexcept {
    std::size_t n = 0;
    for (const auto& b : blocks) n += b.values.size();
    return n;
}

double squared_norm(std::span<const ParamBlock> blocks) noexcept {
    double s = 0.0;
    for (const auto& b : blocks) {
        for (double v : b.values) s += v * v;
    }
    return s;
}

std::vector<double> flatten(std::span<const ParamBlock> blocks) {
    std::vector<double> out;
    out.reserve(total_size(blocks));
    for (const auto& b : blocks) out.insert(out.end(), b.values.begin(), b.values.end());
    return out;
}

}  // namespace flowcast
