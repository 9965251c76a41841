#include "flowcast/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>

#include "flowcast/linear.hpp"
#include "flowcast/lstm.hpp"
#include "flowcast/mlp.hpp"
#include "flowcast/rnn.hpp"

namespace flowcast {

std::string_view to_string(OptimizerKind k) noexcept {
    switch (k) {
        case OptimizerKind::Momentum: return "momentum";
        case OptimizerKind::Adagrad: return "adagrad";
        case OptimizerKind::RmsProp: return "rmsprop";
        case OptimizerKind::Adam: return "adam";
    }
    return "adam";
}

std::string_view to_string(LossKind k) noexcept { return k == LossKind::Mse ? "mse" : "mae"; }

OptimizerKind parse_optimizer(std::string_view text) {
    if (text == "momentum" || text == "sgd") return OptimizerKind::Momentum;
    if (text == "adagrad") return OptimizerKind::Adagrad;
    if (text == "rmsprop") return OptimizerKind::RmsProp;
    if (text == "adam") return OptimizerKind::Adam;
    throw ConfigError("unknown optimizer '" + std::string(text) + "'");
}

LossKind parse_loss(std::string_view text) {
    if (text == "mse") return LossKind::Mse;
    if (text == "mae") return LossKind::Mae;
    throw ConfigError("unknown loss '" + std::string(text) + "'");
}

void TrainConfig::validate() const {
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw ConfigError("learning_rate must be > 0");
    }
    if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
    if (!(rms_decay >= 0.0 && rms_decay < 1.0)) throw ConfigError("rms_decay must lie in [0, 1)");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
        throw ConfigError("Adam betas must lie in [0, 1)");
    }
    if (!(epsilon > 0.0)) throw ConfigError("optimizer epsilon must be > 0");
}

// ---------------------------------------------------------------------------
// Losses

namespace {

void check_lengths(std::span<const double> p, std::span<const double> t) {
    if (p.size() != t.size()) {
        throw ShapeError("loss: " + std::to_string(p.size()) + " predictions vs " +
                         std::to_string(t.size()) + " targets");
    }
    if (p.empty()) throw ShapeError("loss: empty input");
}

double sample_loss(LossKind kind, double p, double t) {
    const double r = p - t;
    return kind == LossKind::Mse ? r * r : std::abs(r);
}

double sample_grad(LossKind kind, double p, double t, double m) {
    const double r = p - t;
    if (kind == LossKind::Mse) return 2.0 * r / m;
    return (r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0)) / m;
}

}  // namespace

LossAndGrad loss_and_grad(LossKind kind, std::span<const double> predictions,
                          std::span<const double> targets) {
    check_lengths(predictions, targets);
    const double m = static_cast<double>(predictions.size());
    LossAndGrad out{0.0, Vector(predictions.size())};
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        out.loss += sample_loss(kind, predictions[i], targets[i]);
        out.gradient[i] = sample_grad(kind, predictions[i], targets[i], m);
    }
    out.loss /= m;
    return out;
}

double loss_value(LossKind kind, std::span<const double> predictions,
                  std::span<const double> targets) {
    check_lengths(predictions, targets);
    double acc = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        acc += sample_loss(kind, predictions[i], targets[i]);
    }
    return acc / static_cast<double>(predictions.size());
}

// ---------------------------------------------------------------------------
// Optimizers

OptimizerState::OptimizerState(OptimizerKind kind, std::span<const ParamBlock> shape) : kind_(kind) {
    for (const auto& b : shape) {
        first_.emplace_back(b.values.size(), 0.0);
        second_.emplace_back(kind == OptimizerKind::Adam ? b.values.size() : 0, 0.0);
    }
}

void OptimizerState::step(std::span<const ParamBlock> params, std::span<const ParamBlock> grads,
                          const TrainConfig& config) {
    if (params.size() != first_.size() || grads.size() != first_.size()) {
        throw ShapeError("optimizer: block count mismatch");
    }
    for (std::size_t b = 0; b < params.size(); ++b) {
        if (params[b].values.size() != first_[b].size() || grads[b].values.size() != first_[b].size()) {
            throw ShapeError("optimizer: block '" + params[b].name + "' changed shape");
        }
        if (!all_finite(grads[b].values)) {
            throw DivergenceError("non-finite gradient in parameter block '" + grads[b].name + "'");
        }
    }
    ++steps_;
    const double lr = config.learning_rate;
    const double eps = config.epsilon;
    const double bias1 = 1.0 - std::pow(config.beta1, static_cast<double>(steps_));
    const double bias2 = 1.0 - std::pow(config.beta2, static_cast<double>(steps_));
    for (std::size_t b = 0; b < params.size(); ++b) {
        auto theta = params[b].values;
        const auto g = grads[b].values;
        auto& m = first_[b];
        switch (kind_) {
            case OptimizerKind::Momentum:
                for (std::size_t k = 0; k < theta.size(); ++k) {
                    m[k] = config.momentum * m[k] - lr * g[k];
                    theta[k] += m[k];
                }
                break;
            case OptimizerKind::Adagrad:
                for (std::size_t k = 0; k < theta.size(); ++k) {
                    m[k] += g[k] * g[k];
                    theta[k] -= lr * g[k] / (std::sqrt(m[k]) + eps);
                }
                break;
            case OptimizerKind::RmsProp:
                for (std::size_t k = 0; k < theta.size(); ++k) {
                    m[k] = config.rms_decay * m[k] + (1.0 - config.rms_decay) * g[k] * g[k];
                    theta[k] -= lr * g[k] / (std::sqrt(m[k]) + eps);
                }
                break;
            case OptimizerKind::Adam: {
                auto& v = second_[b];
                for (std::size_t k = 0; k < theta.size(); ++k) {
                    m[k] = config.beta1 * m[k] + (1.0 - config.beta1) * g[k];
                    v[k] = config.beta2 * v[k] + (1.0 - config.beta2) * g[k] * g[k];
                    const double m_hat = m[k] / bias1;
                    const double v_hat = v[k] / bias2;
                    theta[k] -= lr * m_hat / (std::sqrt(v_hat) + eps);
                }
                break;
            }
        }
    }
}

double clip_global_norm(std::span<const ParamBlock> grads, double max_norm) {
    const double norm = std::sqrt(squared_norm(grads));
    if (max_norm > 0.0 && norm > max_norm && std::isfinite(norm)) {
        const double scale = max_norm / norm;
        for (const auto& b : grads) {
            for (auto& v : b.values) v *= scale;
        }
    }
    return norm;
}

void write_epoch_csv(std::ostream& out, std::span<const EpochLog> logs, bool with_timing) {
    out << "epoch,train_loss,test_loss,seconds\n";
    char buf[128];
    for (const auto& e : logs) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,", e.epoch, e.train_loss, e.test_loss);
        out << buf;
        if (with_timing) {
            std::snprintf(buf, sizeof(buf), "%.6f", e.wall_time.count());
            out << buf;
        }
        out << '\n';
    }
}

// ---------------------------------------------------------------------------
// Trainer

namespace {

void zero(std::span<const ParamBlock> blocks) {
    for (const auto& b : blocks) std::fill(b.values.begin(), b.values.end(), 0.0);
}

// Forward once, then backpropagate the loss gradient for that prediction.
template <class M, class F>
double forward_accumulate(const M& p, std::span<const double> x, F&& grad_of_prediction, M& grads) {
    const double pred = forward_predict(p, x);
    accumulate_gradient(p, x, grad_of_prediction(pred), grads);
    return pred;
}

template <class F>
double forward_accumulate(const LstmParams& p, std::span<const double> x, F&& grad_of_prediction,
                          LstmParams& grads) {
    const LstmTrace trace = lstm_sequence_forward(p, x);
    lstm_backward(p, trace, grad_of_prediction(trace.prediction), grads);
    return trace.prediction;
}

template <class F>
double forward_accumulate(const RnnParams& p, std::span<const double> x, F&& grad_of_prediction,
                          RnnParams& grads) {
    const RnnTrace trace = rnn_sequence_forward(p, x);
    rnn_backward(p, trace, grad_of_prediction(trace.prediction), grads);
    return trace.prediction;
}

// Names the first block holding a NaN/Inf; if every entry is finite the norm
// itself overflowed, so report the block with the largest entry instead.
std::string describe_bad_gradient(std::span<const ParamBlock> blocks) {
    for (const auto& b : blocks) {
        if (!all_finite(b.values)) return "non-finite gradient in block '" + b.name + "'";
    }
    std::string worst = "?";
    double largest = -1.0;
    for (const auto& b : blocks) {
        for (double v : b.values) {
            if (std::abs(v) > largest) {
                largest = std::abs(v);
                worst = b.name;
            }
        }
    }
    return "gradient norm overflow, largest entry in block '" + worst + "'";
}

}  // namespace

template <Differentiable M>
Vector predict_all(const M& params, const Matrix& features) {
    Vector out(features.rows());
    for (std::size_t r = 0; r < features.rows(); ++r) out[r] = forward_predict(params, features.row(r));
    return out;
}

template <Differentiable M>
double evaluate_loss(const M& params, const SupervisedMatrix& data, LossKind kind) {
    if (data.rows() == 0) return 0.0;
    const Vector pred = predict_all(params, data.features);
    return loss_value(kind, pred.span(), data.targets.span());
}

template <Differentiable M>
TrainResult<M> train(M initial, const SupervisedMatrix& train_set, const SupervisedMatrix& test_set,
                     const TrainConfig& config, const EpochCallback<M>& on_epoch) {
    config.validate();
    const std::size_t n = train_set.rows();
    if (n == 0) throw DataError("training set is empty");

    TrainResult<M> result{std::move(initial), {}};
    M& params = result.params;
    M grads = zeros_like(params);
    auto param_view = param_blocks(params);
    auto grad_view = param_blocks(grads);
    OptimizerState optimizer(config.optimizer, param_view);

    // Shuffle stream is decoupled from any initialisation drawn from the same seed.
    Rng rng(config.seed ^ 0x5DEECE66DULL);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        const auto started = std::chrono::steady_clock::now();
        if (config.shuffle_each_epoch) rng.shuffle(std::span<std::size_t>(order));

        double loss_sum = 0.0;
        std::size_t steps = 0;
        for (std::size_t start = 0; start < n; start += config.batch_size) {
            const std::size_t stop = std::min(n, start + config.batch_size);
            const double m = static_cast<double>(stop - start);
            zero(grad_view);
            for (std::size_t k = start; k < stop; ++k) {
                const std::size_t row = order[k];
                const double target = train_set.targets[row];
                forward_accumulate(
                    params, train_set.features.row(row),
                    [&](double pred) {
                        loss_sum += sample_loss(config.loss, pred, target);
                        return sample_grad(config.loss, pred, target, m);
                    },
                    grads);
            }
            const double norm = clip_global_norm(grad_view, config.clip_norm);
            if (!std::isfinite(norm)) {
                std::ostringstream msg;
                msg << "training diverged at epoch " << epoch << ", batch " << steps + 1
                    << ": " << describe_bad_gradient(grad_view)
                    << " (last good epoch " << epoch - 1 << ")";
                throw DivergenceError(msg.str());
            }
            optimizer.step(param_view, grad_view, config);
            ++steps;
        }

        EpochLog log;
        log.epoch = epoch;
        log.steps = steps;
        log.train_loss = loss_sum / static_cast<double>(n);
        log.test_loss = evaluate_loss(params, test_set, config.loss);
        log.wall_time = std::chrono::steady_clock::now() - started;
        if (!std::isfinite(log.train_loss) || !std::isfinite(log.test_loss)) {
            throw DivergenceError("training diverged at epoch " + std::to_string(epoch) +
                                  ": non-finite loss (last good epoch " +
                                  std::to_string(epoch - 1) + ")");
        }
        result.epochs.push_back(log);
        if (on_epoch) on_epoch(log, params);
    }
    return result;
}

template <Differentiable M>
M loss_gradient(const M& params, const Matrix& features, const Vector& targets, LossKind kind) {
    if (features.rows() != targets.size() || targets.size() == 0) {
        throw ShapeError("loss_gradient: feature rows vs targets");
    }
    M grads = zeros_like(params);
    const double m = static_cast<double>(targets.size());
    for (std::size_t r = 0; r < features.rows(); ++r) {
        const double t = targets[r];
        forward_accumulate(
            params, features.row(r), [&](double pred) { return sample_grad(kind, pred, t, m); },
            grads);
    }
    return grads;
}

template <Differentiable M>
GradientCheckReport gradient_check(const M& params, const Matrix& features, const Vector& targets,
                                   LossKind kind, double step, const AnalyticGradient<M>& analytic) {
    M analytic_grads = analytic ? analytic(params, features, targets, kind)
                                : loss_gradient(params, features, targets, kind);
    M work = params;
    auto work_view = param_blocks(work);
    auto grad_view = param_blocks(analytic_grads);
    if (work_view.size() != grad_view.size()) throw ShapeError("gradient_check: block mismatch");

    auto objective = [&]() {
        return loss_value(kind, predict_all(work, features).span(), targets.span());
    };

    GradientCheckReport report;
    for (std::size_t b = 0; b < work_view.size(); ++b) {
        auto theta = work_view[b].values;
        const auto g = grad_view[b].values;
        for (std::size_t k = 0; k < theta.size(); ++k) {
            const double saved = theta[k];
            theta[k] = saved + step;
            const double up = objective();
            theta[k] = saved - step;
            const double down = objective();
            theta[k] = saved;
            const double numeric = (up - down) / (2.0 * step);
            const double denom = std::max({std::abs(g[k]), std::abs(numeric), 1e-8});
            const double rel = std::abs(g[k] - numeric) / denom;
            ++report.checked;
            if (report.checked == 1 || rel > report.max_relative_error) {
                report.max_relative_error = rel;
                report.worst_block = work_view[b].name;
                report.worst_index = k;
                report.analytic = g[k];
                report.numeric = numeric;
            }
        }
    }
    return report;
}

#define FLOWCAST_INSTANTIATE(M)                                                                   \
    template TrainResult<M> train<M>(M, const SupervisedMatrix&, const SupervisedMatrix&,         \
                                     const TrainConfig&, const EpochCallback<M>&);                \
    template Vector predict_all<M>(const M&, const Matrix&);                                      \
    template double evaluate_loss<M>(const M&, const SupervisedMatrix&, LossKind);                \
    template M loss_gradient<M>(const M&, const Matrix&, const Vector&, LossKind);                \
    template GradientCheckReport gradient_check<M>(const M&, const Matrix&, const Vector&,        \
                                                   LossKind, double, const AnalyticGradient<M>&);

FLOWCAST_INSTANTIATE(LstmParams)
FLOWCAST_INSTANTIATE(RnnParams)
FLOWCAST_INSTANTIATE(MlpParams)
FLOWCAST_INSTANTIATE(LinearParams)

#undef FLOWCAST_INSTANTIATE

}  // namespace flowcast
