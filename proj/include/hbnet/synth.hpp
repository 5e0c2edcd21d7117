#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "hbnet/data.hpp"
#include "hbnet/graph.hpp"
#include "hbnet/network.hpp"

namespace hbnet::synth {

struct NodeSpec {
    std::string name;
    data::ColumnRole role = data::ColumnRole::phenological;
    Family family = Family::fixed_gaussian;
    std::vector<std::string> parents;  ///< continuous parents only
    double intercept = 0.0;
    std::vector<double> betas;
    double sigma2 = 1.0;
    /// mixed_gaussian: (1 + |parents|) square covariance of (b0, b).
    Eigen::MatrixXd re_cov;
    /// hetero_mixed_gaussian: random-intercept variance and theta per cluster.
    double sigma2_b = 0.0;
    std::vector<double> theta;
};

/// Generator for a hierarchical conditional Gaussian network. Mixed nodes
/// implicitly have the cluster node as a parent.
struct NetSpec {
    std::string cluster = "F";
    std::vector<double> cluster_probs;
    std::size_t groups_per_cluster = 1;
    std::string group_key = "group";
    std::vector<NodeSpec> nodes;

    std::size_t n_clusters() const { return cluster_probs.size(); }
    /// Throws ModelError on dimension mismatches, cycles or bad covariances.
    void validate() const;
    /// Cluster node first, then the declared nodes.
    graph::Dag dag() const;
    std::vector<NodeRole> roles() const;
    data::Schema schema() const;

    static NetSpec from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

NetSpec load_spec(const std::string& path);

/// n_per_cluster[j] rows for cluster j. Random effects are drawn once per
/// cluster; rows of a cluster are spread round-robin over its groups.
data::Dataset generate(const NetSpec& spec, std::span<const std::size_t> n_per_cluster, std::uint64_t seed);

/// n rows with clusters drawn from cluster_probs.
data::Dataset generate(const NetSpec& spec, std::size_t n, std::uint64_t seed);

}  // namespace hbnet::synth
