#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "flowcast/numcore.hpp"

namespace flowcast {

enum class Activation { Identity, Tanh, Sigmoid, Relu };

std::string_view to_string(Activation a) noexcept;
Activation parse_activation(std::string_view text);

double activate(Activation a, double x) noexcept;
/// Derivative expressed through the activation output y = activate(a, x).
double activation_derivative(Activation a, double y) noexcept;

/// Named view of one contiguous parameter array.
struct ParamBlock {
    std::string name;
    std::span<double> values;
};

struct ConstParamBlock {
    std::string name;
    std::span<const double> values;
};

std::size_t total_size(std::span<const ParamBlock> blocks) noexcept;
double squared_norm(std::span<const ParamBlock> blocks) noexcept;
std::vector<double> flatten(std::span<const ParamBlock> blocks);

}  // namespace flowcast
