#include "flowcast/rnn.hpp"

namespace flowcast {

RnnParams RnnParams::zeros(std::size_t input_size, std::size_t hidden_size,
                           std::size_t encoder_steps, std::size_t output_size) {
    if (input_size == 0 || hidden_size == 0 || output_size == 0 || encoder_steps == 0) {
        throw ConfigError("RNN dimensions must be >= 1");
    }
    RnnParams p;
    p.recurrent_weights = Matrix(hidden_size, hidden_size);
    p.input_weights = Matrix(input_size, hidden_size);
    p.output_weights = Matrix(hidden_size, output_size);
    p.encoder_steps = encoder_steps;
    return p;
}

RnnParams RnnParams::init(Rng& rng, std::size_t input_size, std::size_t hidden_size,
                          std::size_t encoder_steps, const ScaleRule& rule) {
    RnnParams p = zeros(input_size, hidden_size, encoder_steps);
    p.recurrent_weights = init_uniform(rng, hidden_size, hidden_size, rule);
    p.input_weights = init_uniform(rng, input_size, hidden_size, rule);
    p.output_weights = init_uniform(rng, hidden_size, 1, rule);
    return p;
}

void RnnParams::validate() const {
    const std::size_t h = recurrent_weights.rows();
    if (h == 0 || recurrent_weights.cols() != h || input_weights.cols() != h ||
        output_weights.rows() != h || input_weights.rows() == 0 || output_weights.cols() == 0) {
        throw ShapeError("inconsistent RNN shapes: W " + recurrent_weights.shape_string() + ", U " +
                         input_weights.shape_string() + ", V " + output_weights.shape_string());
    }
}

std::vector<ParamBlock> RnnParams::blocks() {
    return {{"W", recurrent_weights.span()}, {"U", input_weights.span()}, {"V", output_weights.span()}};
}

std::vector<ConstParamBlock> RnnParams::blocks() const {
    return {{"W", recurrent_weights.span()}, {"U", input_weights.span()}, {"V", output_weights.span()}};
}

RnnStep rnn_cell_forward(const RnnParams& params, std::span<const double> x,
                         std::span<const double> h_prev) {
    params.validate();
    if (x.size() != params.input_size() || h_prev.size() != params.hidden_size()) {
        throw ShapeError("rnn_cell_forward: input length " + std::to_string(x.size()) +
                         " / state length " + std::to_string(h_prev.size()) +
                         " do not match U " + params.input_weights.shape_string());
    }
    RnnStep step{Vector(params.hidden_size()), Vector(params.output_size())};
    matvec_transposed_accumulate(params.recurrent_weights, h_prev, step.hidden.span());
    matvec_transposed_accumulate(params.input_weights, x, step.hidden.span());
    for (auto& v : step.hidden) v = activate(params.hidden_activation, v);
    matvec_transposed_accumulate(params.output_weights, step.hidden.span(), step.output.span());
    for (auto& v : step.output) v = activate(params.output_activation, v);
    return step;
}

RnnTrace rnn_sequence_forward(const RnnParams& params, std::span<const double> features) {
    params.validate();
    const std::size_t in = params.input_size();
    if (features.size() != params.encoder_steps * in) {
        throw ShapeError("RNN window has " + std::to_string(features.size()) + " values, expected " +
                         std::to_string(params.encoder_steps) + " steps x " + std::to_string(in));
    }
    RnnTrace trace;
    trace.hidden.emplace_back(params.hidden_size());
    for (std::size_t t = 0; t < params.encoder_steps; ++t) {
        auto x = features.subspan(t * in, in);
        auto step = rnn_cell_forward(params, x, trace.hidden.back().span());
        trace.inputs.emplace_back(x);
        trace.hidden.push_back(std::move(step.hidden));
        trace.output = std::move(step.output);
    }
    trace.prediction = trace.output[0];
    return trace;
}

double rnn_predict(const RnnParams& params, std::span<const double> features) {
    return rnn_sequence_forward(params, features).prediction;
}

void rnn_backward(const RnnParams& params, const RnnTrace& trace, double d_prediction,
                  RnnParams& grads) {
    const std::size_t steps = trace.inputs.size();
    if (steps != params.encoder_steps || trace.hidden.size() != steps + 1) {
        throw ShapeError("rnn_backward: trace does not match parameters");
    }
    const std::size_t h = params.hidden_size();
    const double dz_out =
        d_prediction * activation_derivative(params.output_activation, trace.output[0]);

    Vector dh(h);
    const auto& h_last = trace.hidden[steps];
    for (std::size_t i = 0; i < h; ++i) {
        grads.output_weights(i, 0) += h_last[i] * dz_out;
        dh[i] = params.output_weights(i, 0) * dz_out;
    }

    Vector dz(h);
    for (std::size_t t = steps; t-- > 0;) {
        const auto& h_t = trace.hidden[t + 1];
        for (std::size_t i = 0; i < h; ++i) {
            dz[i] = dh[i] * activation_derivative(params.hidden_activation, h_t[i]);
        }
        add_outer(grads.recurrent_weights, trace.hidden[t].span(), dz.span());
        add_outer(grads.input_weights, trace.inputs[t].span(), dz.span());
        dh.fill(0.0);
        matvec_accumulate(params.recurrent_weights, dz.span(), dh.span());
    }
}

RnnParams zeros_like(const RnnParams& p) {
    RnnParams g = RnnParams::zeros(p.input_size(), p.hidden_size(), p.encoder_steps, p.output_size());
    g.hidden_activation = p.hidden_activation;
    g.output_activation = p.output_activation;
    return g;
}

double forward_predict(const RnnParams& p, std::span<const double> features) {
    return rnn_predict(p, features);
}

void accumulate_gradient(const RnnParams& p, std::span<const double> features, double d_prediction,
                         RnnParams& grads) {
    rnn_backward(p, rnn_sequence_forward(p, features), d_prediction, grads);
}

}  // namespace flowcast
