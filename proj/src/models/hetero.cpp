#include <cmath>

#include "hbnet/error.hpp"
#include "hbnet/optim.hpp"
#include "lme_engine.hpp"

namespace hbnet::models {

namespace {

constexpr double kMinAbsCovariate = 1e-8;

struct Iterate {
    detail::LmeEngine::Solution sol;
    std::vector<double> theta;
    double deviance = 0.0;
    bool inner_converged = true;
};

// -2 log-likelihood (up to a constant) of one cluster's rows given the fixed
// effects and variance components, with residual variance sigma2*|nu|^(2 theta).
double cluster_deviance(double theta, const std::vector<double>& resid,
                        const std::vector<double>& abs_nu, double sigma2, double sigma2_b) {
    double s = 0.0, t = 0.0, u = 0.0, logv = 0.0;
    for (std::size_t i = 0; i < resid.size(); ++i) {
        const double v = sigma2 * std::pow(abs_nu[i], 2.0 * theta);
        s += 1.0 / v;
        t += resid[i] / v;
        u += resid[i] * resid[i] / v;
        logv += std::log(v);
    }
    const double denom = 1.0 + sigma2_b * s;
    return logv + std::log(denom) + u - sigma2_b * t * t / denom;
}

}  // namespace

HeteroMixedGaussian fit_lme_hetero(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                                   const Grouping& cluster, const HeteroOptions& options) {
    if (y.size() != X.rows()) throw ModelError("fit_lme_hetero: y and X row counts differ");
    if (cluster.levels.size() < 2) throw ModelError("fit_lme_hetero: at least 2 clusters required");
    detail::check_grouping(cluster, X.rows());
    (void)fit_ols(y, X);

    const std::size_t J = cluster.levels.size();
    const auto n = X.rows();
    LmeOptions inner = options.inner;
    inner.random_slopes = false;

    auto fit_weighted = [&](const Eigen::VectorXd& row_scale) {
        detail::LmeEngine engine(y, X, cluster, 1, row_scale);
        const auto tf = detail::optimise_theta(engine, inner);
        return std::pair{engine.solve(tf.theta), tf.converged};
    };

    auto [sol0, conv0] = fit_weighted(Eigen::VectorXd{});
    Iterate best{sol0, std::vector<double>(J, 0.0), sol0.deviance, conv0};
    Iterate current = best;
    bool converged = true;
    int outer = 0;

    if (!options.fix_theta_zero) {
        converged = false;
        std::vector<std::vector<Eigen::Index>> rows(J);
        for (Eigen::Index i = 0; i < n; ++i) rows[cluster.codes[i]].push_back(i);

        double previous = current.deviance;
        for (outer = 1; outer <= options.max_outer; ++outer) {
            const auto& sol = current.sol;
            const Eigen::VectorXd fixed = X * sol.beta;
            Eigen::VectorXd abs_nu(n);
            for (Eigen::Index i = 0; i < n; ++i) {
                abs_nu(i) = std::abs(fixed(i) + sol.modes(cluster.codes[i], 0));
                if (abs_nu(i) < kMinAbsCovariate)
                    throw ModelError("fit_lme_hetero: variance covariate near zero (|fitted mean| < 1e-8 at row " +
                                     std::to_string(i) + ")");
            }

            const double sigma2 = sol.sigma2;
            const double sigma2_b = sigma2 * sol.lambda(0, 0) * sol.lambda(0, 0);
            std::vector<double> theta(J, 0.0);
            for (std::size_t j = 0; j < J; ++j) {
                if (rows[j].empty()) continue;
                std::vector<double> resid, nu;
                for (auto i : rows[j]) {
                    resid.push_back(y(i) - fixed(i));
                    nu.push_back(abs_nu(i));
                }
                auto res = optim::brent_minimize(
                    [&](double th) { return cluster_deviance(th, resid, nu, sigma2, sigma2_b); },
                    -options.theta_bound, options.theta_bound, 1e-8);
                theta[j] = res.x(0);
            }

            Eigen::VectorXd row_scale(n);
            double log_w = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                const double lw = 2.0 * theta[cluster.codes[i]] * std::log(abs_nu(i));
                log_w += lw;
                row_scale(i) = std::exp(-0.5 * lw);
            }
            auto [sol_w, conv_w] = fit_weighted(row_scale);
            current = Iterate{sol_w, theta, sol_w.deviance + log_w, conv_w};
            if (current.deviance < best.deviance) best = current;
            if (std::abs(current.deviance - previous) < options.rel_tol * std::max(1.0, std::abs(previous))) {
                converged = true;
                break;
            }
            previous = current.deviance;
        }
    }

    const auto& sol = best.sol;
    const int p = static_cast<int>(X.cols());
    HeteroMixedGaussian m;
    m.intercept = sol.beta(0);
    m.betas.assign(sol.beta.data() + 1, sol.beta.data() + p);
    m.sigma2 = sol.sigma2;
    m.sigma2_b = sol.sigma2 * sol.lambda(0, 0) * sol.lambda(0, 0);
    m.re_intercepts.resize(J);
    for (std::size_t j = 0; j < J; ++j) m.re_intercepts[j] = sol.modes(static_cast<Eigen::Index>(j), 0);
    m.theta = best.theta;
    m.cluster_levels = cluster.levels;
    m.loglik = -0.5 * best.deviance;
    m.n_params = p + 1 + 1 + static_cast<int>(J);
    m.flags.converged = converged && best.inner_converged;
    m.flags.iterations = outer;
    m.flags.degenerate = sol.degenerate;
    m.flags.singular = sol.lambda(0, 0) < 1e-4;
    return m;
}

}  // namespace hbnet::models
