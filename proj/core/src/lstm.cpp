#include "flowcast/lstm.hpp"

namespace flowcast {

namespace {

GateParams zero_gate(std::size_t input_size, std::size_t hidden_size) {
    return {Matrix(hidden_size, input_size), Matrix(hidden_size, hidden_size), Vector(hidden_size)};
}

bool same_shape(const GateParams& a, const GateParams& b) {
    return a.input_weights.rows() == b.input_weights.rows() &&
           a.input_weights.cols() == b.input_weights.cols() &&
           a.recurrent_weights.rows() == b.recurrent_weights.rows() &&
           a.recurrent_weights.cols() == b.recurrent_weights.cols() &&
           a.bias.size() == b.bias.size();
}

// z = U x + W h + b for every hidden unit.
void gate_preactivation(const GateParams& g, std::span<const double> x, std::span<const double> h,
                        std::span<double> z) {
    for (std::size_t r = 0; r < z.size(); ++r) {
        z[r] = dot(g.input_weights.row(r), x) + dot(g.recurrent_weights.row(r), h) + g.bias[r];
    }
}

struct CellOut {
    std::span<double> forget, input, candidate, output, cell, cell_tanh, hidden;
};

void cell_kernel(const LstmParams& p, std::span<const double> x, std::span<const double> h_prev,
                 std::span<const double> c_prev, const CellOut& out) {
    gate_preactivation(p.forget, x, h_prev, out.forget);
    gate_preactivation(p.input, x, h_prev, out.input);
    gate_preactivation(p.candidate, x, h_prev, out.candidate);
    gate_preactivation(p.output, x, h_prev, out.output);
    for (std::size_t k = 0; k < out.hidden.size(); ++k) {
        const double g = sigmoid(out.forget[k]);
        const double i = sigmoid(out.input[k]);
        const double cc = tanh_act(out.candidate[k]);
        const double o = sigmoid(out.output[k]);
        const double c = g * c_prev[k] + i * cc;
        const double tc = tanh_act(c);
        out.forget[k] = g;
        out.input[k] = i;
        out.candidate[k] = cc;
        out.output[k] = o;
        out.cell[k] = c;
        out.cell_tanh[k] = tc;
        out.hidden[k] = o * tc;
    }
}

void check_step_shapes(const LstmParams& p, std::size_t x_len, std::size_t h_len, std::size_t c_len) {
    if (x_len != p.input_size() || h_len != p.hidden_size() || c_len != p.hidden_size()) {
        throw ShapeError("lstm cell: input " + std::to_string(x_len) + ", h " + std::to_string(h_len) +
                         ", c " + std::to_string(c_len) + " do not match U " +
                         p.forget.input_weights.shape_string());
    }
}

void accumulate_gate(GateParams& grad, std::span<const double> dz, std::span<const double> x,
                     std::span<const double> h_prev) {
    add_outer(grad.input_weights, dz, x);
    add_outer(grad.recurrent_weights, dz, h_prev);
    for (std::size_t k = 0; k < dz.size(); ++k) grad.bias[k] += dz[k];
}

}  // namespace

LstmParams LstmParams::zeros(std::size_t input_size, std::size_t hidden_size,
                             std::size_t encoder_steps) {
    if (input_size == 0 || hidden_size == 0 || encoder_steps == 0) {
        throw ConfigError("LSTM dimensions must be >= 1");
    }
    LstmParams p;
    p.forget = zero_gate(input_size, hidden_size);
    p.input = zero_gate(input_size, hidden_size);
    p.candidate = zero_gate(input_size, hidden_size);
    p.output = zero_gate(input_size, hidden_size);
    p.readout_weights = Matrix(hidden_size, 1);
    p.readout_bias = Vector(1);
    p.encoder_steps = encoder_steps;
    return p;
}

LstmParams LstmParams::init(Rng& rng, std::size_t input_size, std::size_t hidden_size,
                            std::size_t encoder_steps, const ScaleRule& rule) {
    LstmParams p = zeros(input_size, hidden_size, encoder_steps);
    for (GateParams* g : {&p.forget, &p.input, &p.candidate, &p.output}) {
        g->input_weights = init_uniform(rng, hidden_size, input_size, rule);
        g->recurrent_weights = init_uniform(rng, hidden_size, hidden_size, rule);
    }
    p.readout_weights = init_uniform(rng, hidden_size, 1, rule);
    return p;
}

void LstmParams::validate() const {
    const std::size_t h = hidden_size();
    const bool ok = h >= 1 && input_size() >= 1 && forget.recurrent_weights.rows() == h &&
                    forget.recurrent_weights.cols() == h && forget.bias.size() == h &&
                    same_shape(forget, input) && same_shape(forget, candidate) &&
                    same_shape(forget, output) && readout_weights.rows() == h &&
                    readout_weights.cols() == 1 && readout_bias.size() == 1 && encoder_steps >= 1;
    if (!ok) {
        throw ShapeError("inconsistent LSTM parameter shapes (U_g " +
                         forget.input_weights.shape_string() + ", readout " +
                         readout_weights.shape_string() + ")");
    }
}

std::vector<ParamBlock> LstmParams::blocks() {
    return {
        {"U_g", forget.input_weights.span()},    {"W_g", forget.recurrent_weights.span()},
        {"b_g", forget.bias.span()},             {"U_i", input.input_weights.span()},
        {"W_i", input.recurrent_weights.span()}, {"b_i", input.bias.span()},
        {"U_c", candidate.input_weights.span()}, {"W_c", candidate.recurrent_weights.span()},
        {"b_c", candidate.bias.span()},          {"U_o", output.input_weights.span()},
        {"W_o", output.recurrent_weights.span()}, {"b_o", output.bias.span()},
        {"V_out", readout_weights.span()},       {"b_out", readout_bias.span()},
    };
}

std::vector<ConstParamBlock> LstmParams::blocks() const {
    return {
        {"U_g", forget.input_weights.span()},    {"W_g", forget.recurrent_weights.span()},
        {"b_g", forget.bias.span()},             {"U_i", input.input_weights.span()},
        {"W_i", input.recurrent_weights.span()}, {"b_i", input.bias.span()},
        {"U_c", candidate.input_weights.span()}, {"W_c", candidate.recurrent_weights.span()},
        {"b_c", candidate.bias.span()},          {"U_o", output.input_weights.span()},
        {"W_o", output.recurrent_weights.span()}, {"b_o", output.bias.span()},
        {"V_out", readout_weights.span()},       {"b_out", readout_bias.span()},
    };
}

LstmStep lstm_cell_forward(const LstmParams& params, std::span<const double> x,
                           const LstmState& prev) {
    params.validate();
    check_step_shapes(params, x.size(), prev.h.size(), prev.c.size());
    const std::size_t h = params.hidden_size();
    LstmStep step{LstmState::zeros(h),
                  {Vector(h), Vector(h), Vector(h), Vector(h), Vector(h)}};
    Vector cell_tanh(h);
    cell_kernel(params, x, prev.h.span(), prev.c.span(),
                {step.gates.forget.span(), step.gates.input.span(), step.gates.candidate.span(),
                 step.gates.output.span(), step.state.c.span(), cell_tanh.span(),
                 step.state.h.span()});
    step.gates.cell = step.state.c;
    return step;
}

LstmTrace lstm_sequence_forward(const LstmParams& params, std::span<const double> features) {
    params.validate();
    const std::size_t in = params.input_size();
    const std::size_t h = params.hidden_size();
    const std::size_t steps = params.encoder_steps;
    if (features.size() != steps * in) {
        throw ShapeError("LSTM window has " + std::to_string(features.size()) +
                         " values, expected " + std::to_string(steps) + " steps x " +
                         std::to_string(in));
    }
    LstmTrace tr;
    tr.inputs = Matrix(steps, in, std::vector<double>(features.begin(), features.end()));
    tr.forget = Matrix(steps, h);
    tr.input = Matrix(steps, h);
    tr.candidate = Matrix(steps, h);
    tr.output = Matrix(steps, h);
    tr.cell = Matrix(steps + 1, h);
    tr.cell_tanh = Matrix(steps, h);
    tr.hidden = Matrix(steps + 1, h);
    for (std::size_t t = 0; t < steps; ++t) {
        cell_kernel(params, tr.inputs.row(t), tr.hidden.row(t), tr.cell.row(t),
                    {tr.forget.row(t), tr.input.row(t), tr.candidate.row(t), tr.output.row(t),
                     tr.cell.row(t + 1), tr.cell_tanh.row(t), tr.hidden.row(t + 1)});
    }
    tr.prediction = dot(params.readout_weights.span(), tr.hidden.row(steps)) + params.readout_bias[0];
    return tr;
}

LstmTrace lstm_sequence_forward(const LstmParams& params, std::span<const Vector> window) {
    if (window.size() != params.encoder_steps) {
        throw ShapeError("LSTM window has " + std::to_string(window.size()) +
                         " steps, expected " + std::to_string(params.encoder_steps));
    }
    std::vector<double> flat;
    flat.reserve(window.size() * params.input_size());
    for (const auto& v : window) {
        if (v.size() != params.input_size()) {
            throw ShapeError("LSTM window step has " + std::to_string(v.size()) +
                             " values, expected " + std::to_string(params.input_size()));
        }
        flat.insert(flat.end(), v.begin(), v.end());
    }
    return lstm_sequence_forward(params, std::span<const double>(flat));
}

double lstm_predict(const LstmParams& params, std::span<const double> features) {
    return lstm_sequence_forward(params, features).prediction;
}

void lstm_backward(const LstmParams& params, const LstmTrace& trace, double d_prediction,
                   LstmParams& grads) {
    const std::size_t h = params.hidden_size();
    const std::size_t steps = trace.steps();
    if (steps != params.encoder_steps || trace.hidden.cols() != h ||
        trace.inputs.cols() != params.input_size() || grads.hidden_size() != h ||
        grads.input_size() != params.input_size()) {
        throw ShapeError("lstm_backward: trace or gradient set does not match parameters");
    }

    Vector dh(h);
    Vector dc(h);
    Vector dz_g(h), dz_i(h), dz_c(h), dz_o(h);

    const auto h_last = trace.hidden.row(steps);
    for (std::size_t k = 0; k < h; ++k) {
        grads.readout_weights(k, 0) += h_last[k] * d_prediction;
        dh[k] = params.readout_weights(k, 0) * d_prediction;
    }
    grads.readout_bias[0] += d_prediction;

    for (std::size_t t = steps; t-- > 0;) {
        const auto g = trace.forget.row(t);
        const auto i = trace.input.row(t);
        const auto cc = trace.candidate.row(t);
        const auto o = trace.output.row(t);
        const auto tc = trace.cell_tanh.row(t);
        const auto c_prev = trace.cell.row(t);
        for (std::size_t k = 0; k < h; ++k) {
            const double d_o = dh[k] * tc[k];
            dz_o[k] = d_o * o[k] * (1.0 - o[k]);
            dc[k] += dh[k] * o[k] * (1.0 - tc[k] * tc[k]);
            dz_g[k] = dc[k] * c_prev[k] * g[k] * (1.0 - g[k]);
            dz_i[k] = dc[k] * cc[k] * i[k] * (1.0 - i[k]);
            dz_c[k] = dc[k] * i[k] * (1.0 - cc[k] * cc[k]);
        }
        const auto x = trace.inputs.row(t);
        const auto h_prev = trace.hidden.row(t);
        accumulate_gate(grads.forget, dz_g.span(), x, h_prev);
        accumulate_gate(grads.input, dz_i.span(), x, h_prev);
        accumulate_gate(grads.candidate, dz_c.span(), x, h_prev);
        accumulate_gate(grads.output, dz_o.span(), x, h_prev);

        if (t == 0) break;
        dh.fill(0.0);
        matvec_transposed_accumulate(params.forget.recurrent_weights, dz_g.span(), dh.span());
        matvec_transposed_accumulate(params.input.recurrent_weights, dz_i.span(), dh.span());
        matvec_transposed_accumulate(params.candidate.recurrent_weights, dz_c.span(), dh.span());
        matvec_transposed_accumulate(params.output.recurrent_weights, dz_o.span(), dh.span());
        for (std::size_t k = 0; k < h; ++k) dc[k] *= g[k];
    }
}

LstmParams lstm_backward(const LstmParams& params, const LstmTrace& trace, double d_prediction) {
    LstmParams grads = zeros_like(params);
    lstm_backward(params, trace, d_prediction, grads);
    return grads;
}

LstmParams zeros_like(const LstmParams& p) {
    return LstmParams::zeros(p.input_size(), p.hidden_size(), p.encoder_steps);
}

double forward_predict(const LstmParams& p, std::span<const double> features) {
    return lstm_predict(p, features);
}

void accumulate_gradient(const LstmParams& p, std::span<const double> features, double d_prediction,
                         LstmParams& grads) {
    lstm_backward(p, lstm_sequence_forward(p, features), d_prediction, grads);
}

}  // namespace flowcast
