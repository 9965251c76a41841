#pragma once

// Epsilon-insensitive support vector regression with an RBF kernel, trained by
// sequential minimal optimization on the dual.

#include <cstddef>
#include <span>

#include "flowcast/numcore.hpp"

namespace flowcast {

/// exp(-gamma * ||a - b||^2)
double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma);

struct SvrOptions {
    double c = 0.095;
    double gamma = 0.165;
    double epsilon_tube = 0.01;
    double tol = 1e-3;
    std::size_t max_iterations = 100000;

    void validate() const;
};

struct SvrDiagnostics {
    std::size_t iterations = 0;
    /// Maximal KKT violation (m(alpha) - M(alpha)) when the solver stopped.
    double max_violation = 0.0;
    /// Dual objective 1/2 beta^T Q beta + p^T beta at the solution (minimisation form).
    double objective = 0.0;
    std::size_t n_training = 0;
};

struct SvrModel {
    Matrix support_vectors;  // one row per support vector
    Vector dual_coeffs;      // alpha_i - alpha_i*
    double bias = 0.0;
    double c = 0.0;
    double gamma = 0.0;
    double epsilon_tube = 0.0;
    SvrDiagnostics diagnostics;

    std::size_t n_features() const noexcept { return support_vectors.cols(); }
};

/// Solves the epsilon-SVR dual with second-order working-set selection and no
/// shrinking. Throws ConvergenceError (with the worst KKT violation) if
/// max_iterations updates do not bring the violation below tol.
SvrModel svr_fit(const Matrix& x, std::span<const double> y, const SvrOptions& options);

/// sum_i dual_i * k(sv_i, x) + bias
double svr_predict(const SvrModel& model, std::span<const double> x);

}  // namespace flowcast
