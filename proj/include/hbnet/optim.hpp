#pragma once

#include <functional>

#include <Eigen/Dense>

namespace hbnet::optim {

struct NelderMeadOptions {
    int max_iter = 500;
    /// Stop once max f - min f over the simplex falls below this.
    double ftol = 1e-8;
    double initial_step = 0.25;
};

struct OptimResult {
    Eigen::VectorXd x;
    double value = 0.0;
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
};

/// Derivative-free simplex minimiser with dimension-adaptive coefficients
/// (reflection 1, expansion 1 + 2/n, contraction 0.75 - 1/2n, shrink 1 - 1/n).
/// Deterministic: ties between vertices keep their insertion order.
OptimResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                        const Eigen::VectorXd& start, const NelderMeadOptions& options = {});

/// Brent's golden-section / parabolic minimiser on [lo, hi].
OptimResult brent_minimize(const std::function<double(double)>& f, double lo, double hi,
                           double tol = 1e-8, int max_iter = 200);

}  // namespace hbnet::optim
