#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace hbnet::models {

/// Variance estimates below this are floored before any log-likelihood.
inline constexpr double kVarianceFloor = 1e-12;

struct FitFlags {
    bool converged = true;
    /// Random-effect covariance on the boundary (a relative-factor diagonal < 1e-4).
    bool singular = false;
    /// A variance estimate hit the floor.
    bool degenerate = false;
    int iterations = 0;
};

/// Linear Gaussian regression with fixed effects only.
struct FixedGaussian {
    double intercept = 0.0;
    std::vector<double> betas;
    double sigma2 = 1.0;
    double loglik = 0.0;
    int n_params = 2;
    FitFlags flags;
};

/// Linear mixed model with a random intercept and (optionally) one random
/// slope per parent, sharing a covariance across clusters.
struct MixedGaussian {
    double intercept = 0.0;
    std::vector<double> betas;
    Eigen::MatrixXd re_cov;    ///< q x q
    Eigen::MatrixXd re_modes;  ///< J x q conditional modes (intercept first)
    double sigma2 = 1.0;
    std::vector<std::string> cluster_levels;
    double loglik = 0.0;
    int n_params = 0;
    FitFlags flags;
};

/// Random-intercept model whose residual variance is sigma2 * |nu|^(2 theta_j),
/// nu being the fitted mean of the row and j its cluster.
struct HeteroMixedGaussian {
    double intercept = 0.0;
    std::vector<double> betas;
    double sigma2_b = 0.0;
    std::vector<double> re_intercepts;
    double sigma2 = 1.0;
    std::vector<double> theta;
    std::vector<std::string> cluster_levels;
    double loglik = 0.0;
    int n_params = 0;
    FitFlags flags;
};

struct Multinomial {
    std::vector<std::string> levels;
    std::vector<double> probs;
    double loglik = 0.0;
    int n_params = 0;
};

using LocalModel = std::variant<Multinomial, FixedGaussian, MixedGaussian, HeteroMixedGaussian>;

/// Cluster membership of each row as codes into `levels`.
struct Grouping {
    std::vector<int> codes;
    std::vector<std::string> levels;
};

struct LmeOptions {
    bool random_slopes = true;
    int max_iter = 500;
    double tol = 1e-8;
};

struct HeteroOptions {
    /// Pins every theta_j at 0 (the homoscedastic restriction).
    bool fix_theta_zero = false;
    int max_outer = 50;
    double rel_tol = 1e-6;
    double theta_bound = 4.0;
    LmeOptions inner{.random_slopes = false};
};

/// ML fit of y on X (first column of X is the intercept). `names` labels the
/// columns of X in rank-deficiency errors.
FixedGaussian fit_ols(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                      std::span<const std::string> names = {});

MixedGaussian fit_lme(const Eigen::VectorXd& y, const Eigen::MatrixXd& X, const Grouping& cluster,
                      const LmeOptions& options = {});

HeteroMixedGaussian fit_lme_hetero(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                                   const Grouping& cluster, const HeteroOptions& options = {});

Multinomial fit_multinomial(std::span<const int> codes, std::vector<std::string> levels);

double loglik(const LocalModel& m);
int n_params(const LocalModel& m);
const FitFlags* flags(const LocalModel& m);
std::string_view family_name(const LocalModel& m);
bool is_mixed(const LocalModel& m);
const std::vector<std::string>* cluster_levels(const LocalModel& m);

/// loglik - (n_params / 2) log n. Larger is better.
double node_bic(const LocalModel& m, std::size_t n);

struct Prediction {
    double mean = 0.0;
    double sd = 0.0;
};

/// Conditional mean and sd of a continuous node. `cluster` is a level index
/// into the model's cluster levels; an out-of-range index means an unseen
/// level and yields the population (zero random effect) prediction. Mixed
/// models require a cluster; fixed models ignore it.
Prediction predict_row(const LocalModel& m, std::span<const double> parent_values,
                       std::optional<int> cluster);

nlohmann::json to_json(const LocalModel& m);
LocalModel from_json(const nlohmann::json& j);

}  // namespace hbnet::models
