#pragma once

// Reference implementations written independently of the library code paths:
// plain scalar loops, std::exp / std::tanh, no shared helpers. Tests compare
// the library against these.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "flowcast/lstm.hpp"
#include "flowcast/mlp.hpp"
#include "flowcast/rnn.hpp"
#include "flowcast/training.hpp"

namespace oracle {

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct LstmCellOut {
    std::vector<double> g, i, cand, o, c, h;
};

// One LSTM step, element by element.
inline LstmCellOut lstm_cell(const flowcast::LstmParams& p, const std::vector<double>& x,
                             const std::vector<double>& h_prev, const std::vector<double>& c_prev) {
    const std::size_t H = p.hidden_size();
    const std::size_t I = p.input_size();
    LstmCellOut out;
    auto gate = [&](const flowcast::GateParams& gp, std::size_t k) {
        double z = gp.bias[k];
        for (std::size_t a = 0; a < I; ++a) z += gp.input_weights(k, a) * x[a];
        for (std::size_t b = 0; b < H; ++b) z += gp.recurrent_weights(k, b) * h_prev[b];
        return z;
    };
    for (std::size_t k = 0; k < H; ++k) {
        const double g = logistic(gate(p.forget, k));
        const double i = logistic(gate(p.input, k));
        const double cand = std::tanh(gate(p.candidate, k));
        const double o = logistic(gate(p.output, k));
        const double c = g * c_prev[k] + i * cand;
        out.g.push_back(g);
        out.i.push_back(i);
        out.cand.push_back(cand);
        out.o.push_back(o);
        out.c.push_back(c);
        out.h.push_back(o * std::tanh(c));
    }
    return out;
}

// Folds the cell over a time-major flat window and applies the linear readout.
// T = long double gives an extended-precision reference for finite differences.
template <class T = double>
T lstm_sequence(const flowcast::LstmParams& p, const std::vector<double>& flat) {
    const std::size_t H = p.hidden_size();
    const std::size_t I = p.input_size();
    const T one = 1;
    auto sig = [&](T z) { return one / (one + std::exp(-z)); };
    std::vector<T> h(H, 0), c(H, 0), next_h(H);
    for (std::size_t t = 0; t < p.encoder_steps; ++t) {
        auto gate = [&](const flowcast::GateParams& gp, std::size_t k) {
            T z = gp.bias[k];
            for (std::size_t a = 0; a < I; ++a) z += T(gp.input_weights(k, a)) * T(flat[t * I + a]);
            for (std::size_t b = 0; b < H; ++b) z += T(gp.recurrent_weights(k, b)) * h[b];
            return z;
        };
        for (std::size_t k = 0; k < H; ++k) {
            const T g = sig(gate(p.forget, k));
            const T i = sig(gate(p.input, k));
            const T cand = std::tanh(gate(p.candidate, k));
            const T o = sig(gate(p.output, k));
            c[k] = g * c[k] + i * cand;
            next_h[k] = o * std::tanh(c[k]);
        }
        h = next_h;
    }
    T y = p.readout_bias[0];
    for (std::size_t k = 0; k < H; ++k) y += T(p.readout_weights(k, 0)) * h[k];
    return y;
}

// y = W2^T act(W1^T x + b1) + b2
template <class T = double>
T mlp_forward(const flowcast::MlpParams& p, const std::vector<double>& x) {
    T y = p.output_bias[0];
    for (std::size_t k = 0; k < p.hidden_size(); ++k) {
        T z = p.hidden_bias[k];
        for (std::size_t a = 0; a < p.input_size(); ++a) z += T(p.hidden_weights(a, k)) * T(x[a]);
        T act = z;
        switch (p.hidden_activation) {
            case flowcast::Activation::Identity: break;
            case flowcast::Activation::Tanh: act = std::tanh(z); break;
            case flowcast::Activation::Sigmoid: act = T(1) / (T(1) + std::exp(-z)); break;
            case flowcast::Activation::Relu: act = z > 0 ? z : T(0); break;
        }
        y += T(p.output_weights(k, 0)) * act;
    }
    return y;
}

inline double apply(flowcast::Activation a, double z) {
    switch (a) {
        case flowcast::Activation::Identity: return z;
        case flowcast::Activation::Tanh: return std::tanh(z);
        case flowcast::Activation::Sigmoid: return logistic(z);
        case flowcast::Activation::Relu: return z > 0.0 ? z : 0.0;
    }
    return z;
}

struct RnnCellOut {
    std::vector<double> h, y;
};

// h = f_h(W^T h_prev + U^T x), y = f_o(V^T h)
inline RnnCellOut rnn_cell(const flowcast::RnnParams& p, const std::vector<double>& x,
                           const std::vector<double>& h_prev) {
    const std::size_t H = p.hidden_size();
    const std::size_t I = p.input_size();
    const std::size_t O = p.output_size();
    RnnCellOut out;
    for (std::size_t k = 0; k < H; ++k) {
        double z = 0.0;
        for (std::size_t b = 0; b < H; ++b) z += p.recurrent_weights(b, k) * h_prev[b];
        for (std::size_t a = 0; a < I; ++a) z += p.input_weights(a, k) * x[a];
        out.h.push_back(apply(p.hidden_activation, z));
    }
    for (std::size_t m = 0; m < O; ++m) {
        double z = 0.0;
        for (std::size_t k = 0; k < H; ++k) z += p.output_weights(k, m) * out.h[k];
        out.y.push_back(apply(p.output_activation, z));
    }
    return out;
}

// Max relative error of the library's analytic MSE gradient against central
// differences. The loss is evaluated in long double through `forward`: in
// double, one rounding of a loss near 0.3 is ~5e-17, which at h = 1e-6 is
// already 1e-4 of a gradient entry of 5e-7, and small LSTMs have entries below that.
template <class M, class Forward>
double fd_max_relative_error(const M& params, const flowcast::Matrix& x, const flowcast::Vector& y,
                             Forward forward, double step) {
    auto analytic = flowcast::loss_gradient(params, x, y, flowcast::LossKind::Mse);
    const auto grads = param_blocks(analytic);
    M work = params;
    auto blocks = param_blocks(work);
    auto loss = [&] {
        long double s = 0.0L;
        for (std::size_t r = 0; r < x.rows(); ++r) {
            const std::vector<double> row(x.row(r).begin(), x.row(r).end());
            const long double d = forward(work, row) - static_cast<long double>(y[r]);
            s += d * d;
        }
        return s / static_cast<long double>(x.rows());
    };
    double worst = 0.0;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        for (std::size_t k = 0; k < blocks[b].values.size(); ++k) {
            double& theta = blocks[b].values[k];
            const double saved = theta, plus = saved + step, minus = saved - step;
            theta = plus;
            const long double f_plus = loss();
            theta = minus;
            const long double f_minus = loss();
            theta = saved;
            const double numeric = static_cast<double>((f_plus - f_minus) / static_cast<long double>(plus - minus));
            const double a = grads[b].values[k];
            worst = std::max(worst, std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8}));
        }
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Metrics by direct summation.

inline double rmse(const std::vector<double>& p, const std::vector<double>& o) {
    long double s = 0.0L;
    for (std::size_t i = 0; i < p.size(); ++i) s += (long double)(p[i] - o[i]) * (p[i] - o[i]);
    return static_cast<double>(std::sqrt(s / p.size()));
}

inline double mae(const std::vector<double>& p, const std::vector<double>& o) {
    long double s = 0.0L;
    for (std::size_t i = 0; i < p.size(); ++i) s += std::fabs(p[i] - o[i]);
    return static_cast<double>(s / p.size());
}

inline double r2_observed_mean(const std::vector<double>& p, const std::vector<double>& o) {
    long double mean = 0.0L;
    for (double v : o) mean += v;
    mean /= o.size();
    long double res = 0.0L, tot = 0.0L;
    for (std::size_t i = 0; i < p.size(); ++i) {
        res += (long double)(o[i] - p[i]) * (o[i] - p[i]);
        tot += (o[i] - mean) * (o[i] - mean);
    }
    return static_cast<double>(1.0L - res / tot);
}

// ---------------------------------------------------------------------------
// Epsilon-SVR dual by accelerated projected gradient (FISTA) over the 2l
// variables (alpha, alpha*):
//   min 1/2 (a - a*)^T K (a - a*) + eps * sum(a + a*) - y^T (a - a*)
//   s.t. sum(a - a*) = 0, 0 <= a, a* <= C
// Projection onto the box intersected with the hyperplane is done by bisection
// on the multiplier.

struct SvrDual {
    std::vector<double> beta;  // a - a*
    double objective = 0.0;
};

inline double svr_dual_objective(const std::vector<double>& K, const std::vector<double>& a,
                                 const std::vector<double>& as, const std::vector<double>& y, double eps) {
    const std::size_t l = y.size();
    double quad = 0.0, lin = 0.0;
    for (std::size_t i = 0; i < l; ++i) {
        const double bi = a[i] - as[i];
        double row = 0.0;
        for (std::size_t j = 0; j < l; ++j) row += K[i * l + j] * (a[j] - as[j]);
        quad += bi * row;
        lin += eps * (a[i] + as[i]) - y[i] * bi;
    }
    return 0.5 * quad + lin;
}

inline void project(std::vector<double>& a, std::vector<double>& as, double C) {
    // Find lambda with sum(clip(a - lambda)) - sum(clip(as + lambda)) = 0.
    auto excess = [&](double lam) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            s += std::clamp(a[i] - lam, 0.0, C) - std::clamp(as[i] + lam, 0.0, C);
        }
        return s;
    };
    double lo = -1.0, hi = 1.0;
    while (excess(lo) < 0.0) lo *= 2.0;
    while (excess(hi) > 0.0) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (excess(mid) > 0.0) lo = mid;
        else hi = mid;
    }
    const double lam = 0.5 * (lo + hi);
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = std::clamp(a[i] - lam, 0.0, C);
        as[i] = std::clamp(as[i] + lam, 0.0, C);
    }
}

inline SvrDual svr_dual_fista(const std::vector<double>& K, const std::vector<double>& y, double C,
                              double eps, std::size_t iterations) {
    const std::size_t l = y.size();
    // Lipschitz constant of the gradient: 2 * lambda_max(K), via power iteration.
    std::vector<double> v(l, 1.0), w(l);
    double lambda = 1.0;
    for (int it = 0; it < 200; ++it) {
        double norm = 0.0;
        for (std::size_t i = 0; i < l; ++i) {
            w[i] = 0.0;
            for (std::size_t j = 0; j < l; ++j) w[i] += K[i * l + j] * v[j];
            norm += w[i] * w[i];
        }
        norm = std::sqrt(norm);
        lambda = norm;
        for (std::size_t i = 0; i < l; ++i) v[i] = w[i] / norm;
    }
    const double step = 1.0 / (2.0 * lambda * 1.01);

    std::vector<double> a(l, 0.0), as(l, 0.0), ya = a, yas = as, a_prev = a, as_prev = as, kb(l);
    double t = 1.0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t it = 0; it < iterations; ++it) {
        for (std::size_t i = 0; i < l; ++i) {
            kb[i] = 0.0;
            for (std::size_t j = 0; j < l; ++j) kb[i] += K[i * l + j] * (ya[j] - yas[j]);
        }
        for (std::size_t i = 0; i < l; ++i) {
            a[i] = ya[i] - step * (kb[i] + eps - y[i]);
            as[i] = yas[i] - step * (-kb[i] + eps + y[i]);
        }
        project(a, as, C);
        const double obj = svr_dual_objective(K, a, as, y, eps);
        if (obj > best) {
            t = 1.0;  // adaptive restart
        }
        best = std::min(best, obj);
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        const double mom = (t - 1.0) / t_next;
        for (std::size_t i = 0; i < l; ++i) {
            ya[i] = a[i] + mom * (a[i] - a_prev[i]);
            yas[i] = as[i] + mom * (as[i] - as_prev[i]);
        }
        a_prev = a;
        as_prev = as;
        t = t_next;
    }
    SvrDual out;
    out.objective = svr_dual_objective(K, a, as, y, eps);
    for (std::size_t i = 0; i < l; ++i) out.beta.push_back(a[i] - as[i]);
    return out;
}

// ---------------------------------------------------------------------------
// Linear reservoir stepped one hour at a time.
inline std::vector<double> reservoir(const std::vector<std::vector<double>>& rain,
                                     const std::vector<double>& weights,
                                     const std::vector<std::size_t>& lags, double k, double c, double s0) {
    const std::size_t n = rain.front().size();
    std::vector<double> q(n);
    double s = s0;
    for (std::size_t t = 0; t < n; ++t) {
        q[t] = c * s;
        double in = 0.0;
        for (std::size_t j = 0; j < rain.size(); ++j) {
            if (t >= lags[j]) in += weights[j] * rain[j][t - lags[j]];
        }
        s = s - k * s + in;
    }
    return q;
}

}  // namespace oracle
