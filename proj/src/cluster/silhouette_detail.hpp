#pragma once

#include <span>

#include <Eigen/Dense>

namespace hbnet::cluster::detail {

Eigen::MatrixXd pairwise_distances(const Eigen::MatrixXd& points);
double silhouette_from_distances(const Eigen::MatrixXd& D, std::span<const int> labels);

}  // namespace hbnet::cluster::detail
