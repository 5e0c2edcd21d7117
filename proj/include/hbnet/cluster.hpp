#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "hbnet/data.hpp"

namespace hbnet::cluster {

struct ResidualStats {
    data::GroupKey group;
    double mean = 0.0;
    double sd = 0.0;
    std::size_t count = 0;
};

/// Pooled OLS of the target on every other continuous column.
struct PooledRegression {
    std::string target;
    std::vector<std::string> covariates;
    Eigen::VectorXd coef;  ///< intercept first, then one per covariate

    /// y - yhat for every row of `ds`, which must carry the same columns.
    Eigen::VectorXd residuals(const data::Dataset& ds) const;
};

PooledRegression fit_pooled_regression(const data::Dataset& ds, const std::string& target);

/// Residuals of the pooled regression of `target`, in row order.
Eigen::VectorXd pooled_residuals(const data::Dataset& ds, const std::string& target);

/// Mean and sample sd (n - 1 denominator, 0 for singletons) per group key,
/// in group-key order.
std::vector<ResidualStats> group_stats(std::span<const double> residuals, const data::Dataset& ds);

struct Merge {
    std::size_t left = 0;   ///< smaller node id
    std::size_t right = 0;  ///< larger node id
    double height = 0.0;
    std::size_t size = 0;   ///< leaves under the new node
};

/// Leaves are 0..G-1; merge s creates node G + s.
struct Dendrogram {
    std::vector<Merge> merges;
    std::size_t leaf_count = 0;

    nlohmann::json to_json() const;
};

/// Ward linkage (squared-distance Lance-Williams update). Heights are
/// square roots of the merge costs. Equal costs merge the pair whose
/// (min leaf, max leaf) is lexicographically smallest.
Dendrogram ward_linkage(const Eigen::MatrixXd& points);

/// Labels 1..k per leaf after applying the first G - k merges; clusters are
/// numbered in order of their smallest leaf.
std::vector<int> cut_tree(const Dendrogram& d, std::size_t k);

/// Mean silhouette width; points in singleton clusters contribute 0.
double silhouette(const Eigen::MatrixXd& points, std::span<const int> labels);

struct Standardizer {
    Eigen::RowVectorXd mean;
    Eigen::RowVectorXd sd;

    static Standardizer fit(const Eigen::MatrixXd& x);
    Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
};

struct ClusterOptions {
    /// Fixed number of clusters; chosen by silhouette when unset.
    std::optional<std::size_t> k;
    std::size_t max_k = 100;
    /// z-score the (mean, sd) features before linkage; off clusters them raw.
    bool standardize = true;
};

struct ClusterModel {
    PooledRegression regression;
    std::vector<std::string> group_columns;
    std::vector<ResidualStats> stats;  ///< training groups, key order
    Standardizer scaler;
    Eigen::MatrixXd points;            ///< standardized (mean, sd) per group
    Dendrogram dendrogram;
    std::vector<std::pair<std::size_t, double>> silhouette_by_k;
    std::size_t k = 0;
    std::vector<int> labels;           ///< 1..k per training group
    Eigen::MatrixXd centroids;         ///< k x 2, standardized space

    std::vector<std::string> levels() const;

    /// Label per group of `ds` (group-key order). Known groups keep their
    /// training label; others go to the nearest centroid of their
    /// standardized residual features.
    std::vector<int> assign(const data::Dataset& ds) const;

    nlohmann::json to_json() const;
    static ClusterModel from_json(const nlohmann::json& j);
};

ClusterModel fit_clusters(const data::Dataset& ds, const ClusterOptions& options = {});

/// Adds (or replaces) the discrete cluster column `name` from `model`.
data::Dataset add_cluster_column(const data::Dataset& ds, const ClusterModel& model,
                                 const std::string& name = "cluster");

}  // namespace hbnet::cluster
