#pragma once

#include <span>
#include <vector>

#include "flowcast/numcore.hpp"
#include "flowcast/params.hpp"

namespace flowcast {

/// Affine regressor y = w^T x + b. Convex under squared loss, which makes it a
/// useful reference for optimizer behaviour.
struct LinearParams {
    Vector weights;
    Vector bias{0.0};

    static LinearParams zeros(std::size_t input_size);

    std::size_t input_size() const noexcept { return weights.size(); }
    std::vector<ParamBlock> blocks();
    std::vector<ConstParamBlock> blocks() const;
};

LinearParams zeros_like(const LinearParams& p);
double forward_predict(const LinearParams& p, std::span<const double> features);
void accumulate_gradient(const LinearParams& p, std::span<const double> features,
                         double d_prediction, LinearParams& grads);
inline std::vector<ParamBlock> param_blocks(LinearParams& p) { return p.blocks(); }

}  // namespace flowcast
