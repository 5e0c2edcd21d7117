#include <cmath>
#include <numbers>

#include "hbnet/error.hpp"
#include "hbnet/models.hpp"

namespace hbnet::models {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

double gaussian_loglik(double rss, double n, double sigma2) {
    return -0.5 * n * std::log(2.0 * std::numbers::pi * sigma2) - 0.5 * rss / sigma2;
}

}  // namespace

FixedGaussian fit_ols(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                      std::span<const std::string> names) {
    const auto n = X.rows();
    const auto p = X.cols();
    if (y.size() != n) throw ModelError("fit_ols: y and X row counts differ");
    if (p < 1) throw ModelError("fit_ols: design has no columns");
    if (n <= p)
        throw ModelError("fit_ols: need more rows (" + std::to_string(n) + ") than columns (" +
                         std::to_string(p) + ")");

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (qr.rank() < p) {
        std::vector<std::string> aliased;
        const auto& perm = qr.colsPermutation().indices();
        for (Eigen::Index k = qr.rank(); k < p; ++k) {
            const auto col = static_cast<std::size_t>(perm(k));
            aliased.push_back(col < names.size() ? names[col] : "column " + std::to_string(col));
        }
        std::string msg = "rank-deficient design; aliased:";
        for (const auto& a : aliased) msg += " " + a;
        throw RankDeficientError(msg, std::move(aliased));
    }

    const Eigen::VectorXd beta = qr.solve(y);
    const double rss = (y - X * beta).squaredNorm();
    FixedGaussian m;
    m.intercept = beta(0);
    m.betas.assign(beta.data() + 1, beta.data() + p);
    m.sigma2 = rss / static_cast<double>(n);
    m.flags.degenerate = m.sigma2 < kVarianceFloor;
    m.loglik = gaussian_loglik(rss, static_cast<double>(n), std::max(m.sigma2, kVarianceFloor));
    m.n_params = static_cast<int>(p) + 1;
    return m;
}

Multinomial fit_multinomial(std::span<const int> codes, std::vector<std::string> levels) {
    if (codes.empty()) throw ModelError("fit_multinomial: no observations");
    std::vector<double> counts(levels.size(), 0.0);
    for (int c : codes) {
        if (c < 0 || static_cast<std::size_t>(c) >= levels.size())
            throw ModelError("fit_multinomial: level code out of range");
        counts[c] += 1.0;
    }
    Multinomial m;
    const auto n = static_cast<double>(codes.size());
    for (double c : counts) {
        m.probs.push_back(c / n);
        if (c > 0.0) m.loglik += c * std::log(c / n);
    }
    m.levels = std::move(levels);
    m.n_params = static_cast<int>(m.levels.size()) - 1;
    return m;
}

double loglik(const LocalModel& m) {
    return std::visit([](const auto& x) { return x.loglik; }, m);
}

int n_params(const LocalModel& m) {
    return std::visit([](const auto& x) { return x.n_params; }, m);
}

const FitFlags* flags(const LocalModel& m) {
    return std::visit(overloaded{[](const Multinomial&) -> const FitFlags* { return nullptr; },
                                 [](const auto& x) -> const FitFlags* { return &x.flags; }},
                      m);
}

std::string_view family_name(const LocalModel& m) {
    return std::visit(overloaded{[](const Multinomial&) { return std::string_view("multinomial_root"); },
                                 [](const FixedGaussian&) { return std::string_view("fixed_gaussian"); },
                                 [](const MixedGaussian&) { return std::string_view("mixed_gaussian"); },
                                 [](const HeteroMixedGaussian&) {
                                     return std::string_view("hetero_mixed_gaussian");
                                 }},
                      m);
}

bool is_mixed(const LocalModel& m) {
    return std::holds_alternative<MixedGaussian>(m) || std::holds_alternative<HeteroMixedGaussian>(m);
}

const std::vector<std::string>* cluster_levels(const LocalModel& m) {
    if (auto* x = std::get_if<MixedGaussian>(&m)) return &x->cluster_levels;
    if (auto* x = std::get_if<HeteroMixedGaussian>(&m)) return &x->cluster_levels;
    if (auto* x = std::get_if<Multinomial>(&m)) return &x->levels;
    return nullptr;
}

double node_bic(const LocalModel& m, std::size_t n) {
    return loglik(m) - 0.5 * n_params(m) * std::log(static_cast<double>(n));
}

namespace {

double linear_mean(double intercept, const std::vector<double>& betas, std::span<const double> x) {
    if (x.size() != betas.size())
        throw ModelError("predict_row: expected " + std::to_string(betas.size()) +
                         " parent values, got " + std::to_string(x.size()));
    double mean = intercept;
    for (std::size_t k = 0; k < betas.size(); ++k) mean += betas[k] * x[k];
    return mean;
}

bool known_level(std::optional<int> cluster, std::size_t n_levels) {
    return cluster && *cluster >= 0 && static_cast<std::size_t>(*cluster) < n_levels;
}

}  // namespace

Prediction predict_row(const LocalModel& m, std::span<const double> x, std::optional<int> cluster) {
    return std::visit(
        overloaded{
            [&](const Multinomial&) -> Prediction {
                throw ModelError("predict_row: multinomial node has no continuous prediction");
            },
            [&](const FixedGaussian& f) -> Prediction {
                return {linear_mean(f.intercept, f.betas, x), std::sqrt(std::max(f.sigma2, kVarianceFloor))};
            },
            [&](const MixedGaussian& f) -> Prediction {
                if (!cluster) throw ModelError("predict_row: mixed model requires a cluster");
                double mean = linear_mean(f.intercept, f.betas, x);
                if (known_level(cluster, f.cluster_levels.size())) {
                    const auto row = f.re_modes.row(*cluster);
                    mean += row(0);
                    for (Eigen::Index k = 1; k < row.size(); ++k) mean += row(k) * x[k - 1];
                }
                return {mean, std::sqrt(std::max(f.sigma2, kVarianceFloor))};
            },
            [&](const HeteroMixedGaussian& f) -> Prediction {
                if (!cluster) throw ModelError("predict_row: mixed model requires a cluster");
                double mean = linear_mean(f.intercept, f.betas, x);
                double theta = 0.0;
                if (known_level(cluster, f.cluster_levels.size())) {
                    mean += f.re_intercepts[*cluster];
                    theta = f.theta[*cluster];
                } else if (!f.theta.empty()) {
                    for (double t : f.theta) theta += t;
                    theta /= static_cast<double>(f.theta.size());
                }
                const double sd = std::sqrt(std::max(f.sigma2, kVarianceFloor)) * std::pow(std::abs(mean), theta);
                return {mean, std::max(sd, std::sqrt(kVarianceFloor))};
            }},
        m);
}

}  // namespace hbnet::models
