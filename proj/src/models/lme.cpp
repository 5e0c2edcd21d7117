#include <cmath>
#include <limits>
#include <numbers>

#include "hbnet/error.hpp"
#include "hbnet/optim.hpp"
#include "lme_engine.hpp"

namespace hbnet::models {
namespace detail {

void check_grouping(const Grouping& cluster, Eigen::Index n_rows) {
    if (static_cast<Eigen::Index>(cluster.codes.size()) != n_rows)
        throw ModelError("cluster vector length does not match the number of rows");
    for (int c : cluster.codes)
        if (c < 0 || static_cast<std::size_t>(c) >= cluster.levels.size())
            throw ModelError("cluster code out of range");
}

LmeEngine::LmeEngine(const Eigen::VectorXd& y, const Eigen::MatrixXd& X, const Grouping& cluster,
                     int q, const Eigen::VectorXd& row_scale)
    : p_(static_cast<int>(X.cols())), q_(q), n_(static_cast<double>(X.rows())) {
    check_grouping(cluster, X.rows());
    if (q_ < 1 || q_ > p_) throw ModelError("random-effect dimension out of range");
    const bool scaled = row_scale.size() > 0;
    blocks_.assign(cluster.levels.size(), Block{Eigen::MatrixXd::Zero(p_, p_),
                                                Eigen::VectorXd::Zero(p_), 0.0, 0});
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        const double s = scaled ? row_scale(i) : 1.0;
        const Eigen::VectorXd xi = X.row(i).transpose() * s;
        const double yi = y(i) * s;
        Block& b = blocks_[cluster.codes[i]];
        b.XtX.selfadjointView<Eigen::Lower>().rankUpdate(xi);
        b.Xty += xi * yi;
        b.yty += yi * yi;
        ++b.rows;
    }
    XtX_ = Eigen::MatrixXd::Zero(p_, p_);
    Xty_ = Eigen::VectorXd::Zero(p_);
    for (auto& b : blocks_) {
        const Eigen::MatrixXd full = b.XtX.selfadjointView<Eigen::Lower>();
        b.XtX = full;
        XtX_ += b.XtX;
        Xty_ += b.Xty;
        yty_ += b.yty;
    }
}

Eigen::MatrixXd LmeEngine::lambda(const Eigen::VectorXd& theta) const {
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(q_, q_);
    int k = 0;
    for (int j = 0; j < q_; ++j)
        for (int i = j; i < q_; ++i) L(i, j) = theta(k++);
    return L;
}

Eigen::VectorXd LmeEngine::identity_theta() const {
    Eigen::VectorXd t = Eigen::VectorXd::Zero(n_theta());
    int k = 0;
    for (int j = 0; j < q_; ++j) {
        t(k) = 1.0;
        k += q_ - j;
    }
    return t;
}

double LmeEngine::deviance(const Eigen::VectorXd& theta) const {
    return evaluate(theta, false).deviance;
}

LmeEngine::Solution LmeEngine::solve(const Eigen::VectorXd& theta) const {
    return evaluate(theta, true);
}

LmeEngine::Solution LmeEngine::evaluate(const Eigen::VectorXd& theta, bool want_modes) const {
    const Eigen::MatrixXd Lam = lambda(theta);
    const std::size_t J = blocks_.size();

    Eigen::MatrixXd A = XtX_;
    Eigen::VectorXd b = Xty_;
    double r2 = yty_;
    double ld = 0.0;

    std::vector<Eigen::MatrixXd> chol;
    std::vector<Eigen::VectorXd> cus;
    std::vector<Eigen::MatrixXd> rzxs;
    if (want_modes) {
        chol.reserve(J);
        cus.reserve(J);
        rzxs.reserve(J);
    }

    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(q_, q_);
    for (const Block& blk : blocks_) {
        const Eigen::MatrixXd LtZ = Lam.transpose() * blk.XtX.topRows(q_);  // q x p
        Eigen::MatrixXd M = LtZ.leftCols(q_) * Lam + I;
        Eigen::LLT<Eigen::MatrixXd> llt(M);
        const Eigen::MatrixXd L = llt.matrixL();
        const auto tri = L.triangularView<Eigen::Lower>();
        Eigen::VectorXd cu = tri.solve(Lam.transpose() * blk.Xty.head(q_));
        Eigen::MatrixXd rzx = tri.solve(LtZ);
        A.noalias() -= rzx.transpose() * rzx;
        b.noalias() -= rzx.transpose() * cu;
        r2 -= cu.squaredNorm();
        ld += 2.0 * L.diagonal().array().log().sum();
        if (want_modes) {
            chol.push_back(L);
            cus.push_back(std::move(cu));
            rzxs.push_back(std::move(rzx));
        }
    }

    Solution s;
    Eigen::LLT<Eigen::MatrixXd> llt_a(A);
    if (llt_a.info() != Eigen::Success) {
        s.deviance = std::numeric_limits<double>::infinity();
        return s;
    }
    s.beta = llt_a.solve(b);
    r2 -= s.beta.dot(b);
    const double floor = n_ * kVarianceFloor;
    if (!(r2 > floor)) {
        r2 = floor;
        s.degenerate = true;
    }
    s.sigma2 = r2 / n_;
    s.deviance = ld + n_ * (1.0 + std::log(2.0 * std::numbers::pi * s.sigma2));
    s.lambda = Lam;
    if (want_modes) {
        s.modes = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(J), q_);
        for (std::size_t j = 0; j < J; ++j) {
            Eigen::VectorXd rhs = cus[j] - rzxs[j] * s.beta;
            Eigen::VectorXd u = chol[j].triangularView<Eigen::Lower>().transpose().solve(rhs);
            s.modes.row(static_cast<Eigen::Index>(j)) = (Lam * u).transpose();
        }
    }
    return s;
}

ThetaFit optimise_theta(const LmeEngine& engine, const LmeOptions& options) {
    auto objective = [&](const Eigen::VectorXd& t) { return engine.deviance(t); };
    optim::NelderMeadOptions nm{.max_iter = options.max_iter, .ftol = options.tol, .initial_step = 0.25};
    auto res = optim::nelder_mead(objective, engine.identity_theta(), nm);
    ThetaFit fit{res.x, res.value, res.iterations, res.converged};

    // One restart from the optimum guards against a collapsed simplex.
    const int remaining = options.max_iter - res.iterations;
    if (res.converged && remaining > 0) {
        nm.max_iter = remaining;
        nm.initial_step = 0.05;
        auto again = optim::nelder_mead(objective, res.x, nm);
        fit.iterations += again.iterations;
        if (again.value < fit.deviance - options.tol) {
            fit.theta = again.x;
            fit.deviance = again.value;
            fit.converged = again.converged;
        }
    }

    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(engine.n_theta());
    const double boundary = engine.deviance(zero);
    if (boundary <= fit.deviance) {
        fit.theta = zero;
        fit.deviance = boundary;
    }

    // Sign of each column of lambda is not identified; report diag >= 0.
    const int q = engine.q();
    int k = 0;
    for (int j = 0; j < q; ++j) {
        if (fit.theta(k) < 0.0)
            for (int i = 0; i < q - j; ++i) fit.theta(k + i) = -fit.theta(k + i);
        k += q - j;
    }
    return fit;
}

}  // namespace detail

MixedGaussian fit_lme(const Eigen::VectorXd& y, const Eigen::MatrixXd& X, const Grouping& cluster,
                      const LmeOptions& options) {
    if (y.size() != X.rows()) throw ModelError("fit_lme: y and X row counts differ");
    if (cluster.levels.size() < 2) throw ModelError("fit_lme: at least 2 clusters required");
    detail::check_grouping(cluster, X.rows());
    (void)fit_ols(y, X);  // rank and size checks

    const int p = static_cast<int>(X.cols());
    const int q = options.random_slopes ? p : 1;
    detail::LmeEngine engine(y, X, cluster, q);
    const auto tf = detail::optimise_theta(engine, options);
    const auto sol = engine.solve(tf.theta);

    MixedGaussian m;
    m.intercept = sol.beta(0);
    m.betas.assign(sol.beta.data() + 1, sol.beta.data() + p);
    m.sigma2 = sol.sigma2;
    m.re_cov = sol.sigma2 * sol.lambda * sol.lambda.transpose();
    m.re_modes = sol.modes;
    m.cluster_levels = cluster.levels;
    m.loglik = -0.5 * sol.deviance;
    m.n_params = p + q * (q + 1) / 2 + 1;
    m.flags.converged = tf.converged;
    m.flags.iterations = tf.iterations;
    m.flags.degenerate = sol.degenerate;
    m.flags.singular = (sol.lambda.diagonal().array() < 1e-4).any();
    return m;
}

}  // namespace hbnet::models
