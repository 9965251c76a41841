#pragma once

// Mini-batch training for the differentiable models, optimizers, losses and a
// central-difference gradient checker.

#include <chrono>
#include <concepts>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flowcast/dataset.hpp"
#include "flowcast/numcore.hpp"
#include "flowcast/params.hpp"

namespace flowcast {

enum class OptimizerKind { Momentum, Adagrad, RmsProp, Adam };
enum class LossKind { Mse, Mae };

std::string_view to_string(OptimizerKind k) noexcept;
std::string_view to_string(LossKind k) noexcept;
OptimizerKind parse_optimizer(std::string_view text);
LossKind parse_loss(std::string_view text);

struct TrainConfig {
    OptimizerKind optimizer = OptimizerKind::Adam;
    double learning_rate = 0.001;
    std::size_t batch_size = 72;
    std::size_t epochs = 30;
    LossKind loss = LossKind::Mse;
    std::uint64_t seed = 0;
    double clip_norm = 5.0;  // global-norm clip; <= 0 disables
    bool shuffle_each_epoch = true;

    double momentum = 0.9;    // Momentum
    double rms_decay = 0.9;   // RMSProp
    double beta1 = 0.9;       // Adam
    double beta2 = 0.999;     // Adam
    double epsilon = 1e-8;    // Adagrad, RMSProp, Adam

    void validate() const;
};

struct LossAndGrad {
    double loss = 0.0;
    Vector gradient;  // d loss / d prediction
};

/// MSE: mean (p-t)^2, gradient 2(p-t)/m.  MAE: mean |p-t|, subgradient sign(p-t)/m.
LossAndGrad loss_and_grad(LossKind kind, std::span<const double> predictions,
                          std::span<const double> targets);
double loss_value(LossKind kind, std::span<const double> predictions,
                  std::span<const double> targets);

/// Per-parameter accumulators for the selected optimizer.
class OptimizerState {
public:
    OptimizerState(OptimizerKind kind, std::span<const ParamBlock> shape);

    /// Applies one update. Throws DivergenceError naming the block if any
    /// gradient is non-finite; parameters are untouched in that case.
    void step(std::span<const ParamBlock> params, std::span<const ParamBlock> grads,
              const TrainConfig& config);

    OptimizerKind kind() const noexcept { return kind_; }
    std::uint64_t steps() const noexcept { return steps_; }
    const std::vector<std::vector<double>>& first_moment() const noexcept { return first_; }
    const std::vector<std::vector<double>>& second_moment() const noexcept { return second_; }

private:
    OptimizerKind kind_;
    std::uint64_t steps_ = 0;
    std::vector<std::vector<double>> first_;
    std::vector<std::vector<double>> second_;
};

/// Rescales all gradient blocks so their joint L2 norm is at most max_norm.
/// Returns the norm before clipping.
double clip_global_norm(std::span<const ParamBlock> grads, double max_norm);

struct EpochLog {
    std::size_t epoch = 0;  // 1-based
    double train_loss = 0.0;
    double test_loss = 0.0;
    std::chrono::duration<double> wall_time{0.0};
    std::size_t steps = 0;  // optimizer updates this epoch
};

/// `epoch,train_loss,test_loss,seconds`; seconds are left empty unless with_timing.
void write_epoch_csv(std::ostream& out, std::span<const EpochLog> logs, bool with_timing);

/// Contract the trainer needs from a model type.
template <class M>
concept Differentiable = requires(const M& cm, M& m, std::span<const double> x, double d) {
    { forward_predict(cm, x) } -> std::convertible_to<double>;
    accumulate_gradient(cm, x, d, m);
    { zeros_like(cm) } -> std::same_as<M>;
    { param_blocks(m) } -> std::same_as<std::vector<ParamBlock>>;
};

template <class M>
struct TrainResult {
    M params;
    std::vector<EpochLog> epochs;
};

/// Called after every epoch with the current parameters.
template <class M>
using EpochCallback = std::function<void(const EpochLog&, const M&)>;

/// Mini-batch training on (scaled) supervised data. Each epoch visits every
/// training row once in a seeded shuffled order, in ceil(n / batch_size) updates
/// (the short final batch included). The test split is evaluated after each
/// epoch and never influences updates. Throws DivergenceError on a non-finite
/// loss or gradient, reporting the last good epoch.
template <Differentiable M>
TrainResult<M> train(M initial, const SupervisedMatrix& train_set, const SupervisedMatrix& test_set,
                     const TrainConfig& config, const EpochCallback<M>& on_epoch = {});

template <Differentiable M>
Vector predict_all(const M& params, const Matrix& features);

template <Differentiable M>
double evaluate_loss(const M& params, const SupervisedMatrix& data, LossKind kind);

struct GradientCheckReport {
    double max_relative_error = 0.0;
    std::string worst_block;
    std::size_t worst_index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    std::size_t checked = 0;
};

/// Analytic gradient of the batch loss; the default uses the model's backward pass.
template <class M>
using AnalyticGradient = std::function<M(const M&, const Matrix&, const Vector&, LossKind)>;

/// Analytic gradient of the batch loss via accumulate_gradient.
template <Differentiable M>
M loss_gradient(const M& params, const Matrix& features, const Vector& targets, LossKind kind);

/// Compares the analytic loss gradient with central differences
/// (f(theta+h) - f(theta-h)) / 2h for every parameter. Relative error uses
/// max(|analytic|, |numeric|, 1e-8) as denominator.
template <Differentiable M>
GradientCheckReport gradient_check(const M& params, const Matrix& features, const Vector& targets,
                                   LossKind kind = LossKind::Mse, double step = 1e-6,
                                   const AnalyticGradient<M>& analytic = {});

}  // namespace flowcast
