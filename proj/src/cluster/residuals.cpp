#include <cmath>

#include "hbnet/cluster.hpp"
#include "hbnet/error.hpp"
#include "hbnet/models.hpp"

namespace hbnet::cluster {

namespace {

Eigen::MatrixXd design(const data::Dataset& ds, const std::vector<std::string>& covariates) {
    const auto n = static_cast<Eigen::Index>(ds.n_rows());
    Eigen::MatrixXd X(n, static_cast<Eigen::Index>(covariates.size()) + 1);
    X.col(0).setOnes();
    for (std::size_t k = 0; k < covariates.size(); ++k) {
        auto v = ds.continuous(covariates[k]);
        for (Eigen::Index i = 0; i < n; ++i) X(i, static_cast<Eigen::Index>(k) + 1) = v[static_cast<std::size_t>(i)];
    }
    return X;
}

Eigen::VectorXd response(const data::Dataset& ds, const std::string& target) {
    auto v = ds.continuous(target);
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

PooledRegression fit_pooled_regression(const data::Dataset& ds, const std::string& target) {
    if (ds.schema().at(target).kind != data::ColumnKind::continuous)
        throw DataError("pooled regression: target " + target + " is not continuous");
    PooledRegression reg;
    reg.target = target;
    for (const auto& c : ds.schema().columns())
        if (c.kind == data::ColumnKind::continuous && c.name != target) reg.covariates.push_back(c.name);
    // With no covariates the fit is intercept-only and residuals are y - mean(y).
    std::vector<std::string> names{"(intercept)"};
    names.insert(names.end(), reg.covariates.begin(), reg.covariates.end());
    auto fit = models::fit_ols(response(ds, target), design(ds, reg.covariates), names);
    reg.coef.resize(static_cast<Eigen::Index>(fit.betas.size()) + 1);
    reg.coef(0) = fit.intercept;
    for (std::size_t k = 0; k < fit.betas.size(); ++k) reg.coef(static_cast<Eigen::Index>(k) + 1) = fit.betas[k];
    return reg;
}

Eigen::VectorXd PooledRegression::residuals(const data::Dataset& ds) const {
    return response(ds, target) - design(ds, covariates) * coef;
}

Eigen::VectorXd pooled_residuals(const data::Dataset& ds, const std::string& target) {
    return fit_pooled_regression(ds, target).residuals(ds);
}

std::vector<ResidualStats> group_stats(std::span<const double> residuals, const data::Dataset& ds) {
    if (residuals.size() != ds.n_rows())
        throw DataError("group_stats: residual length does not match the dataset");
    const data::Groups g = ds.groups();
    std::vector<ResidualStats> out;
    out.reserve(g.keys.size());
    for (std::size_t i = 0; i < g.keys.size(); ++i) {
        ResidualStats s;
        s.group = g.keys[i];
        s.count = g.rows[i].size();
        double sum = 0.0;
        for (auto r : g.rows[i]) sum += residuals[r];
        s.mean = sum / static_cast<double>(s.count);
        if (s.count > 1) {
            double ss = 0.0;
            for (auto r : g.rows[i]) ss += (residuals[r] - s.mean) * (residuals[r] - s.mean);
            s.sd = std::sqrt(ss / static_cast<double>(s.count - 1));
        }
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace hbnet::cluster
