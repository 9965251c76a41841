#include "flowcast/svr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

namespace flowcast {

double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma) {
    if (a.size() != b.size()) {
        throw ShapeError("rbf_kernel: lengths " + std::to_string(a.size()) + " and " +
                         std::to_string(b.size()));
    }
    double d2 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        d2 += d * d;
    }
    return std::exp(-gamma * d2);
}

void SvrOptions::validate() const {
    if (!(c > 0.0)) throw ConfigError("SVR C must be > 0");
    if (!(gamma > 0.0)) throw ConfigError("SVR gamma must be > 0");
    if (!(epsilon_tube >= 0.0)) throw ConfigError("SVR epsilon must be >= 0");
    if (!(tol > 0.0)) throw ConfigError("SVR tolerance must be > 0");
    if (max_iterations == 0) throw ConfigError("SVR max_iterations must be >= 1");
}

namespace {

constexpr double kTau = 1e-12;

// Variables 0..l-1 are alpha (label +1), l..2l-1 are alpha* (label -1).
class SmoSolver {
public:
    SmoSolver(const Matrix& x, std::span<const double> y, const SvrOptions& opt)
        : l_(x.rows()), c_(opt.c), kernel_(l_ * l_) {
        for (std::size_t i = 0; i < l_; ++i) {
            kernel_[i * l_ + i] = 1.0;
            for (std::size_t j = 0; j < i; ++j) {
                const double k = rbf_kernel(x.row(i), x.row(j), opt.gamma);
                kernel_[i * l_ + j] = k;
                kernel_[j * l_ + i] = k;
            }
        }
        alpha_.assign(2 * l_, 0.0);
        linear_.resize(2 * l_);
        for (std::size_t i = 0; i < l_; ++i) {
            linear_[i] = opt.epsilon_tube - y[i];
            linear_[i + l_] = opt.epsilon_tube + y[i];
        }
        grad_ = linear_;
    }

    double label(std::size_t t) const { return t < l_ ? 1.0 : -1.0; }
    double kern(std::size_t s, std::size_t t) const { return kernel_[(s % l_) * l_ + (t % l_)]; }
    // Q_st = y_s y_t K(s, t)
    double q(std::size_t s, std::size_t t) const { return label(s) * label(t) * kern(s, t); }
    bool at_upper(std::size_t t) const { return alpha_[t] >= c_; }
    bool at_lower(std::size_t t) const { return alpha_[t] <= 0.0; }

    // Second-order working-set selection; returns the violation m - M.
    double select(std::size_t& out_i, std::size_t& out_j) const {
        const std::size_t n = 2 * l_;
        double gmax = -std::numeric_limits<double>::infinity();
        std::size_t i = n;
        for (std::size_t t = 0; t < n; ++t) {
            if (label(t) > 0) {
                if (!at_upper(t) && -grad_[t] >= gmax) {
                    gmax = -grad_[t];
                    i = t;
                }
            } else if (!at_lower(t) && grad_[t] >= gmax) {
                gmax = grad_[t];
                i = t;
            }
        }
        double gmax2 = -std::numeric_limits<double>::infinity();
        double best = std::numeric_limits<double>::infinity();
        std::size_t j = n;
        for (std::size_t t = 0; t < n; ++t) {
            if (label(t) > 0) {
                if (at_lower(t)) continue;
                const double grad_diff = gmax + grad_[t];
                gmax2 = std::max(gmax2, grad_[t]);
                if (grad_diff > 0.0 && i < n) {
                    double quad = 2.0 - 2.0 * label(i) * q(i, t);
                    if (quad <= 0.0) quad = kTau;
                    const double obj = -(grad_diff * grad_diff) / quad;
                    if (obj <= best) {
                        best = obj;
                        j = t;
                    }
                }
            } else {
                if (at_upper(t)) continue;
                const double grad_diff = gmax - grad_[t];
                gmax2 = std::max(gmax2, -grad_[t]);
                if (grad_diff > 0.0 && i < n) {
                    double quad = 2.0 + 2.0 * label(i) * q(i, t);
                    if (quad <= 0.0) quad = kTau;
                    const double obj = -(grad_diff * grad_diff) / quad;
                    if (obj <= best) {
                        best = obj;
                        j = t;
                    }
                }
            }
        }
        out_i = i;
        out_j = j;
        if (i == n || j == n) return 0.0;
        return gmax + gmax2;
    }

    void update(std::size_t i, std::size_t j) {
        const double old_i = alpha_[i];
        const double old_j = alpha_[j];
        const double qij = q(i, j);
        double& ai = alpha_[i];
        double& aj = alpha_[j];
        if (label(i) != label(j)) {
            double quad = 2.0 + 2.0 * qij;
            if (quad <= 0.0) quad = kTau;
            const double delta = (-grad_[i] - grad_[j]) / quad;
            const double diff = ai - aj;
            ai += delta;
            aj += delta;
            if (diff > 0.0) {
                if (aj < 0.0) {
                    aj = 0.0;
                    ai = diff;
                }
            } else if (ai < 0.0) {
                ai = 0.0;
                aj = -diff;
            }
            if (diff > 0.0) {
                if (ai > c_) {
                    ai = c_;
                    aj = c_ - diff;
                }
            } else if (aj > c_) {
                aj = c_;
                ai = c_ + diff;
            }
        } else {
            double quad = 2.0 - 2.0 * qij;
            if (quad <= 0.0) quad = kTau;
            const double delta = (grad_[i] - grad_[j]) / quad;
            const double sum = ai + aj;
            ai -= delta;
            aj += delta;
            if (sum > c_) {
                if (ai > c_) {
                    ai = c_;
                    aj = sum - c_;
                }
            } else if (aj < 0.0) {
                aj = 0.0;
                ai = sum;
            }
            if (sum > c_) {
                if (aj > c_) {
                    aj = c_;
                    ai = sum - c_;
                }
            } else if (ai < 0.0) {
                ai = 0.0;
                aj = sum;
            }
        }
        const double di = ai - old_i;
        const double dj = aj - old_j;
        const double yi = label(i);
        const double yj = label(j);
        const double* ki = &kernel_[(i % l_) * l_];
        const double* kj = &kernel_[(j % l_) * l_];
        for (std::size_t t = 0; t < l_; ++t) {
            const double step = yi * ki[t] * di + yj * kj[t] * dj;
            grad_[t] += step;         // label +1
            grad_[t + l_] -= step;    // label -1
        }
    }

    double rho() const {
        double ub = std::numeric_limits<double>::infinity();
        double lb = -std::numeric_limits<double>::infinity();
        double sum_free = 0.0;
        std::size_t n_free = 0;
        for (std::size_t t = 0; t < 2 * l_; ++t) {
            const double yg = label(t) * grad_[t];
            if (at_upper(t)) {
                if (label(t) < 0) ub = std::min(ub, yg);
                else lb = std::max(lb, yg);
            } else if (at_lower(t)) {
                if (label(t) > 0) ub = std::min(ub, yg);
                else lb = std::max(lb, yg);
            } else {
                ++n_free;
                sum_free += yg;
            }
        }
        return n_free > 0 ? sum_free / static_cast<double>(n_free) : 0.5 * (ub + lb);
    }

    double objective() const {
        double v = 0.0;
        for (std::size_t t = 0; t < 2 * l_; ++t) v += alpha_[t] * (grad_[t] + linear_[t]);
        return 0.5 * v;
    }

    std::size_t size() const { return l_; }
    double dual(std::size_t i) const { return alpha_[i] - alpha_[i + l_]; }

private:
    std::size_t l_;
    double c_;
    std::vector<double> kernel_;
    std::vector<double> alpha_;
    std::vector<double> linear_;
    std::vector<double> grad_;
};

}  // namespace

SvrModel svr_fit(const Matrix& x, std::span<const double> y, const SvrOptions& options) {
    options.validate();
    if (x.rows() < 2) throw ConfigError("SVR needs at least two samples");
    if (y.size() != x.rows()) {
        throw ShapeError("SVR: " + std::to_string(x.rows()) + " rows but " +
                         std::to_string(y.size()) + " targets");
    }

    SmoSolver solver(x, y, options);
    std::size_t iter = 0;
    double violation = 0.0;
    bool converged = false;
    while (true) {
        std::size_t i = 0, j = 0;
        violation = solver.select(i, j);
        if (violation < options.tol || i == 2 * x.rows() || j == 2 * x.rows()) {
            converged = true;
            break;
        }
        if (iter >= options.max_iterations) break;
        solver.update(i, j);
        ++iter;
    }
    if (!converged) {
        std::ostringstream msg;
        msg << "SVR SMO did not converge after " << iter << " iterations; worst KKT violation "
            << violation << " (tol " << options.tol << ")";
        throw ConvergenceError(msg.str());
    }

    SvrModel model;
    model.c = options.c;
    model.gamma = options.gamma;
    model.epsilon_tube = options.epsilon_tube;
    model.bias = -solver.rho();
    model.diagnostics = {iter, violation, solver.objective(), x.rows()};

    std::vector<std::size_t> support;
    for (std::size_t i = 0; i < solver.size(); ++i) {
        if (solver.dual(i) != 0.0) support.push_back(i);
    }
    model.support_vectors = Matrix(support.size(), x.cols());
    model.dual_coeffs = Vector(support.size());
    for (std::size_t k = 0; k < support.size(); ++k) {
        const auto src = x.row(support[k]);
        std::copy(src.begin(), src.end(), model.support_vectors.row(k).begin());
        model.dual_coeffs[k] = solver.dual(support[k]);
    }
    if (support.empty()) model.support_vectors = Matrix(0, x.cols());
    return model;
}

double svr_predict(const SvrModel& model, std::span<const double> x) {
    if (x.size() != model.n_features()) {
        throw ShapeError("SVR expects " + std::to_string(model.n_features()) + " features, got " +
                         std::to_string(x.size()));
    }
    double acc = 0.0;
    for (std::size_t k = 0; k < model.dual_coeffs.size(); ++k) {
        acc += model.dual_coeffs[k] * rbf_kernel(model.support_vectors.row(k), x, model.gamma);
    }
    return acc + model.bias;
}

}  // namespace flowcast
