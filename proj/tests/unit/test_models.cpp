#include <cmath>
#include <numbers>

#include <doctest.h>

#include "helpers.hpp"
#include "oracles.hpp"
#include "hbnet/error.hpp"
#include "hbnet/models.hpp"

using namespace hbnet;
using namespace hbnet::models;

namespace {

struct Problem {
    Eigen::VectorXd y;
    Eigen::MatrixXd X;
    Grouping g;
};

Grouping grouping(std::size_t J, std::size_t m) {
    Grouping g;
    for (std::size_t j = 0; j < J; ++j) g.levels.push_back(std::to_string(j + 1));
    for (std::size_t j = 0; j < J; ++j)
        for (std::size_t i = 0; i < m; ++i) g.codes.push_back(static_cast<int>(j));
    return g;
}

/// y = 1 + 2 x + b_j + e with b_j ~ N(0, s2b), e ~ N(0, s2).
Problem random_intercept(Rng& rng, std::size_t J, std::size_t m, double s2b, double s2 = 1.0) {
    Problem p;
    p.g = grouping(J, m);
    const auto n = static_cast<Eigen::Index>(J * m);
    p.y.resize(n);
    p.X.resize(n, 2);
    std::vector<double> b(J);
    for (auto& v : b) v = std::sqrt(s2b) * rng.normal();
    for (Eigen::Index i = 0; i < n; ++i) {
        const double x = rng.normal();
        p.X.row(i) << 1.0, x;
        p.y(i) = 1.0 + 2.0 * x + b[static_cast<std::size_t>(p.g.codes[static_cast<std::size_t>(i)])] +
                 std::sqrt(s2) * rng.normal();
    }
    return p;
}

/// Marginal log-likelihood of a random-intercept model, per group by
/// Sherman-Morrison: V = s2 I + s2b 11'.
double ri_loglik(const Problem& p, const Eigen::VectorXd& beta, double s2, double s2b) {
    const Eigen::VectorXd r = p.y - p.X * beta;
    std::vector<double> sum(p.g.levels.size(), 0.0), ss(p.g.levels.size(), 0.0), cnt(p.g.levels.size(), 0.0);
    for (std::size_t i = 0; i < p.g.codes.size(); ++i) {
        const auto j = static_cast<std::size_t>(p.g.codes[i]);
        sum[j] += r(static_cast<Eigen::Index>(i));
        ss[j] += r(static_cast<Eigen::Index>(i)) * r(static_cast<Eigen::Index>(i));
        cnt[j] += 1.0;
    }
    double ll = 0.0;
    for (std::size_t j = 0; j < sum.size(); ++j) {
        const double m = cnt[j], d = s2 + m * s2b;
        const double logdet = (m - 1) * std::log(s2) + std::log(d);
        const double quad = (ss[j] - s2b * sum[j] * sum[j] / d) / s2;
        ll -= 0.5 * (m * std::log(2 * std::numbers::pi) + logdet + quad);
    }
    return ll;
}

Eigen::VectorXd beta_of(double intercept, const std::vector<double>& betas) {
    Eigen::VectorXd b(static_cast<Eigen::Index>(betas.size()) + 1);
    b(0) = intercept;
    for (std::size_t k = 0; k < betas.size(); ++k) b(static_cast<Eigen::Index>(k) + 1) = betas[k];
    return b;
}

}  // namespace

TEST_CASE("fit_ols on an exact line is flagged degenerate") {
    Eigen::VectorXd y(10);
    Eigen::MatrixXd X(10, 2);
    for (int i = 0; i < 10; ++i) {
        X.row(i) << 1.0, i;
        y(i) = 2.0 * i + 1.0;
    }
    auto f = fit_ols(y, X);
    CHECK(f.betas[0] == doctest::Approx(2.0));
    CHECK(f.intercept == doctest::Approx(1.0));
    CHECK(f.sigma2 < 1e-16 + kVarianceFloor);
    CHECK(f.flags.degenerate);
    CHECK(std::isfinite(f.loglik));
}

TEST_CASE("fit_ols intercept only gives the mean and population variance") {
    Eigen::VectorXd y(4);
    y << 1, 2, 3, 6;
    auto f = fit_ols(y, Eigen::MatrixXd::Ones(4, 1));
    CHECK(f.intercept == doctest::Approx(3.0));
    CHECK(f.sigma2 == doctest::Approx((4 + 1 + 0 + 9) / 4.0));
    CHECK(f.n_params == 2);
}

TEST_CASE("fit_ols loglik equals the pointwise density sum, sigma2 = RSS / n") {
    Rng rng(20);
    Eigen::VectorXd y(20);
    Eigen::MatrixXd X(20, 2);
    for (int i = 0; i < 20; ++i) {
        const double x = rng.normal();
        X.row(i) << 1.0, x;
        y(i) = 0.5 + 1.5 * x + 0.5 * rng.normal();
    }
    auto f = fit_ols(y, X);
    double rss = 0.0, ll = 0.0;
    for (int i = 0; i < 20; ++i) {
        const double mu = f.intercept + f.betas[0] * X(i, 1), r = y(i) - mu;
        rss += r * r;
        ll += -0.5 * std::log(2 * std::numbers::pi * f.sigma2) - r * r / (2 * f.sigma2);
    }
    CHECK(f.sigma2 == doctest::Approx(rss / 20).epsilon(1e-12));
    CHECK(f.loglik == doctest::Approx(ll).epsilon(1e-12));
    CHECK(f.n_params == 3);
}

TEST_CASE("fit_ols errors") {
    Eigen::MatrixXd X(4, 3);
    X << 1, 1, 2, 1, 2, 4, 1, 3, 6, 1, 4, 8;
    Eigen::VectorXd y(4);
    y << 1, 2, 1, 3;
    const std::vector<std::string> names{"(intercept)", "a", "b"};
    try {
        fit_ols(y, X, names);
        FAIL("expected rank deficiency");
    } catch (const RankDeficientError& e) {
        CHECK_FALSE(e.aliased().empty());
    }
    CHECK_THROWS_AS(fit_ols(y.head(2), Eigen::MatrixXd::Ones(2, 2)), ModelError);
}

TEST_CASE("fit_lme with no between-group variation matches OLS") {
    // Group means of x and of the noise are identical across groups, so the
    // variance component sits on the boundary.
    Rng rng(1);
    const std::size_t J = 5, m = 8;
    std::vector<double> xs(m), es(m);
    for (auto& v : xs) v = rng.normal();
    Problem p;
    p.g = grouping(J, m);
    p.y.resize(J * m);
    p.X.resize(J * m, 2);
    for (std::size_t j = 0; j < J; ++j) {
        double mean = 0.0;
        for (auto& v : es) {
            v = rng.normal();
            mean += v / m;
        }
        for (std::size_t i = 0; i < m; ++i) {
            const auto r = static_cast<Eigen::Index>(j * m + i);
            p.X.row(r) << 1.0, xs[i];
            p.y(r) = 1.0 + 2.0 * xs[i] + es[i] - mean;
        }
    }
    auto ols = fit_ols(p.y, p.X);
    auto lme = fit_lme(p.y, p.X, p.g, {.random_slopes = false});
    CHECK(std::fabs(lme.loglik - ols.loglik) < 1e-6);
    CHECK(lme.flags.singular);
    CHECK(lme.re_cov(0, 0) < 1e-6);
    CHECK(lme.re_modes.cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("fit_lme matches the balanced grid oracle") {
    Rng rng(7);
    auto p = random_intercept(rng, 10, 50, 1.5);
    auto lme = fit_lme(p.y, p.X, p.g, {.random_slopes = false});
    std::vector<std::vector<double>> X;
    std::vector<double> y(p.y.data(), p.y.data() + p.y.size());
    for (Eigen::Index i = 0; i < p.X.rows(); ++i) X.push_back({p.X(i, 0), p.X(i, 1)});
    auto o = oracle::balanced_grid_search(X, y, 10);
    CHECK(lme.re_cov(0, 0) / lme.sigma2 == doctest::Approx(o.gamma).epsilon(1e-3));
    CHECK(lme.sigma2 == doctest::Approx(o.sigma2).epsilon(1e-3));
    CHECK(lme.intercept == doctest::Approx(o.beta[0]).epsilon(1e-3));
    CHECK(lme.betas[0] == doctest::Approx(o.beta[1]).epsilon(1e-3));
    CHECK(lme.loglik == doctest::Approx(o.loglik).epsilon(1e-9));
    CHECK(lme.n_params == 2 + 1 + 1);
}

TEST_CASE("fit_lme parameter count with random slopes") {
    Rng rng(8);
    auto p = random_intercept(rng, 6, 30, 1.0);
    auto lme = fit_lme(p.y, p.X, p.g);
    CHECK(lme.re_cov.rows() == 2);
    CHECK(lme.n_params == 2 + 3 + 1);
    CHECK(lme.re_modes.rows() == 6);
    CHECK(lme.re_modes.cols() == 2);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(lme.re_cov);
    CHECK(es.eigenvalues().minCoeff() >= -1e-12);
    CHECK((lme.re_cov - lme.re_cov.transpose()).norm() < 1e-12);
}

TEST_CASE("fit_lme errors on a single cluster") {
    Rng rng(2);
    auto p = random_intercept(rng, 1, 20, 1.0);
    CHECK_THROWS_AS(fit_lme(p.y, p.X, p.g), ModelError);
}

TEST_CASE("property: random-intercept ML fits are local optima") {
    Rng rng(30);
    for (int trial = 0; trial < 20; ++trial) {
        auto p = random_intercept(rng, 4 + rng.below(6), 10 + rng.below(20), 0.2 + 2 * rng.uniform());
        auto lme = fit_lme(p.y, p.X, p.g, {.random_slopes = false});
        const Eigen::VectorXd beta = beta_of(lme.intercept, lme.betas);
        const double s2 = lme.sigma2, s2b = lme.re_cov(0, 0);
        const double at = ri_loglik(p, beta, s2, s2b);
        CHECK(at == doctest::Approx(lme.loglik).epsilon(1e-9));
        for (int k = 0; k < 4; ++k)
            for (double h : {-1e-3, 1e-3}) {
                Eigen::VectorXd b = beta;
                double a = s2, c = s2b;
                if (k < 2) b(k) += h;
                if (k == 2) a += h;
                if (k == 3) c = std::max(0.0, c + h);
                CHECK(ri_loglik(p, b, a, c) <= at + 1e-6);
            }
    }
}

TEST_CASE("property: shrinkage of conditional modes") {
    // Same draws, decreasing true variance of the random intercept.
    double previous = 1e300;
    for (double s2b : {4.0, 1.0, 0.25, 0.01, 0.0}) {
        Rng rng(13);
        auto p = random_intercept(rng, 8, 20, s2b);
        auto lme = fit_lme(p.y, p.X, p.g, {.random_slopes = false});
        const double size = lme.re_modes.cwiseAbs().maxCoeff();
        CHECK(size <= previous + 1e-9);
        previous = size;
        if (lme.re_cov(0, 0) == 0.0) CHECK(size == 0.0);
    }
    CHECK(previous < 0.2);
}

TEST_CASE("hetero with theta pinned at 0 matches the random-intercept fit") {
    Rng rng(9);
    auto p = random_intercept(rng, 6, 40, 1.0);
    p.y.array() += 20.0;
    auto lme = fit_lme(p.y, p.X, p.g, {.random_slopes = false});
    auto h = fit_lme_hetero(p.y, p.X, p.g, {.fix_theta_zero = true});
    CHECK(h.loglik == doctest::Approx(lme.loglik).epsilon(1e-4));
    CHECK(h.intercept == doctest::Approx(lme.intercept).epsilon(1e-4));
    CHECK(h.betas[0] == doctest::Approx(lme.betas[0]).epsilon(1e-4));
    CHECK(h.sigma2 == doctest::Approx(lme.sigma2).epsilon(1e-4));
    CHECK(h.sigma2_b == doctest::Approx(lme.re_cov(0, 0)).epsilon(1e-4));
    for (double t : h.theta) CHECK(t == 0.0);
}

TEST_CASE("hetero recovers the ordering of theta") {
    const std::vector<double> theta{0.0, 0.5, 0.0, 0.5, 0.0};
    Rng rng(10);
    Problem p;
    p.g = grouping(5, 400);
    p.y.resize(2000);
    p.X.resize(2000, 2);
    for (Eigen::Index i = 0; i < 2000; ++i) {
        const auto j = static_cast<std::size_t>(p.g.codes[static_cast<std::size_t>(i)]);
        const double x = rng.normal();
        const double mu = 10.0 + 2.0 * x + 0.5 * static_cast<double>(j);
        p.X.row(i) << 1.0, x;
        p.y(i) = mu + 0.3 * std::pow(std::fabs(mu), theta[j]) * rng.normal();
    }
    auto h = fit_lme_hetero(p.y, p.X, p.g);
    CHECK(h.n_params == 2 + 2 + 5);
    double lo = -1e9, hi = 1e9;
    for (std::size_t j = 0; j < 5; ++j) {
        if (theta[j] == 0.0) lo = std::max(lo, h.theta[j]);
        else hi = std::min(hi, h.theta[j]);
    }
    CHECK(lo < hi);
    for (std::size_t j = 0; j < 5; ++j)
        if (theta[j] > 0.0) CHECK(h.theta[j] > 0.0);
    auto homo = fit_lme_hetero(p.y, p.X, p.g, {.fix_theta_zero = true});
    CHECK(h.loglik >= homo.loglik - 1e-6);
}

TEST_CASE("hetero refuses fitted means near zero") {
    Rng rng(11);
    Problem p;
    p.g = grouping(3, 10);
    p.y = Eigen::VectorXd::Zero(30);
    for (int i = 0; i < 30; ++i) p.y(i) = (i % 2 ? 1e-10 : -1e-10);
    p.X = Eigen::MatrixXd::Ones(30, 1);
    CHECK_THROWS_AS(fit_lme_hetero(p.y, p.X, p.g), ModelError);
}

TEST_CASE("property: nesting inequalities") {
    Rng rng(12);
    for (int trial = 0; trial < 30; ++trial) {
        auto p = random_intercept(rng, 3 + rng.below(6), 5 + rng.below(25), 3 * rng.uniform(), 0.5 + rng.uniform());
        p.y.array() += 15.0;
        auto ols = fit_ols(p.y, p.X);
        auto lme = fit_lme(p.y, p.X, p.g);
        CHECK(lme.loglik >= ols.loglik - 1e-6);
        auto h = fit_lme_hetero(p.y, p.X, p.g);
        auto homo = fit_lme_hetero(p.y, p.X, p.g, {.fix_theta_zero = true});
        CHECK(h.loglik >= homo.loglik - 1e-6);
    }
}

TEST_CASE("fit_multinomial") {
    auto m = fit_multinomial(std::vector<int>{0, 0, 1, 1}, {"a", "b"});
    CHECK(m.probs[0] == doctest::Approx(0.5));
    CHECK(m.loglik == doctest::Approx(4 * std::log(0.5)));
    CHECK(m.n_params == 1);
    CHECK(node_bic(m, 4) == doctest::Approx(4 * std::log(0.5) - 0.5 * std::log(4.0)));
    auto one = fit_multinomial(std::vector<int>{0, 0, 0}, {"x"});
    CHECK(one.probs[0] == 1.0);
    CHECK(one.loglik == 0.0);
    auto tri = fit_multinomial(std::vector<int>{0, 0, 0, 1}, {"a", "b"});
    CHECK(tri.loglik == doctest::Approx(3 * std::log(0.75) + std::log(0.25)));
    double s = 0.0;
    for (double p : tri.probs) s += p;
    CHECK(std::fabs(s - 1.0) < 1e-12);
}

TEST_CASE("node_bic is strictly decreasing in n_params") {
    FixedGaussian a;
    a.loglik = -10.0;
    a.n_params = 2;
    FixedGaussian b = a;
    b.n_params = 3;
    CHECK(node_bic(a, 50) > node_bic(b, 50));
    CHECK(node_bic(a, 50) == doctest::Approx(-10.0 - std::log(50.0)));
}

TEST_CASE("useless parent lowers BIC on noise") {
    Rng rng(14);
    int decreases = 0;
    for (int seed = 0; seed < 100; ++seed) {
        const int n = 8 + static_cast<int>(rng.below(60));
        Eigen::VectorXd y(n);
        Eigen::MatrixXd X0 = Eigen::MatrixXd::Ones(n, 1), X1(n, 2);
        for (int i = 0; i < n; ++i) {
            y(i) = rng.normal();
            X1.row(i) << 1.0, rng.normal();
        }
        if (node_bic(fit_ols(y, X1), static_cast<std::size_t>(n)) < node_bic(fit_ols(y, X0), static_cast<std::size_t>(n)))
            ++decreases;
    }
    CHECK(decreases >= 90);
}

TEST_CASE("predict_row") {
    FixedGaussian f;
    f.intercept = 1.0;
    f.betas = {2.0};
    f.sigma2 = 4.0;
    const std::vector<double> x{3.0};
    auto p = predict_row(f, x, std::nullopt);
    CHECK(p.mean == 7.0);
    CHECK(p.sd == 2.0);
    CHECK_THROWS_AS(predict_row(f, std::vector<double>{1.0, 2.0}, std::nullopt), ModelError);

    MixedGaussian m;
    m.intercept = 1.0;
    m.betas = {2.0};
    m.sigma2 = 1.0;
    m.re_cov = Eigen::MatrixXd::Identity(2, 2);
    m.re_modes = Eigen::MatrixXd::Zero(2, 2);
    m.re_modes(1, 0) = 0.5;
    m.cluster_levels = {"1", "2"};
    CHECK(predict_row(m, x, 1).mean - predict_row(m, x, 0).mean == doctest::Approx(0.5));
    CHECK(predict_row(m, x, 5).mean == 7.0);
    CHECK_THROWS_AS(predict_row(m, x, std::nullopt), ModelError);

    HeteroMixedGaussian h;
    h.intercept = 4.0;
    h.sigma2 = 1.0;
    h.theta = {0.5};
    h.re_intercepts = {0.0};
    h.cluster_levels = {"1"};
    auto hp = predict_row(h, std::vector<double>{}, 0);
    CHECK(hp.mean == 4.0);
    CHECK(hp.sd == doctest::Approx(2.0));
}

TEST_CASE("local models survive a JSON round trip") {
    Rng rng(15);
    auto p = random_intercept(rng, 5, 20, 1.0);
    p.y.array() += 10.0;
    const std::vector<LocalModel> ms{fit_multinomial(std::vector<int>{0, 1, 1}, {"a", "b"}), fit_ols(p.y, p.X),
                                     fit_lme(p.y, p.X, p.g), fit_lme_hetero(p.y, p.X, p.g)};
    const std::vector<double> x{0.3};
    for (const auto& m : ms) {
        auto back = from_json(to_json(m));
        CHECK(family_name(back) == family_name(m));
        CHECK(loglik(back) == loglik(m));
        CHECK(n_params(back) == n_params(m));
        if (m.index() > 0) {
            auto a = predict_row(m, x, 2), b = predict_row(back, x, 2);
            CHECK(a.mean == b.mean);
            CHECK(a.sd == b.sd);
        }
    }
    CHECK_THROWS_AS(from_json(nlohmann::json{{"family", "nope"}}), ModelError);
}
