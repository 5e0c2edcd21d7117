#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "hbnet/data.hpp"
#include "hbnet/graph.hpp"
#include "hbnet/models.hpp"

namespace hbnet {

enum class Family { multinomial_root, fixed_gaussian, mixed_gaussian, hetero_mixed_gaussian };

std::string_view to_string(Family f);
Family parse_family(std::string_view s);

struct NodeRole {
    std::string node;
    Family family = Family::fixed_gaussian;
    bool forced_cluster_parent = false;

    bool operator==(const NodeRole&) const = default;
};

/// Default roles from the schema: the target is heteroscedastic mixed,
/// phenological nodes mixed, weather nodes fixed, the cluster column the
/// multinomial root. Group keys are not network nodes.
std::vector<NodeRole> derive_roles(const data::Schema& schema);

/// Same nodes with every hierarchical family downgraded to fixed_gaussian.
std::vector<NodeRole> baseline_roles(std::vector<NodeRole> roles);

/// Throws ModelError unless there is exactly one multinomial root, at most
/// one hetero node, and forced_cluster_parent matches the mixed families.
void validate_roles(const std::vector<NodeRole>& roles);

/// Local model of one node together with the design that produced it.
struct NodeModel {
    std::string node;
    Family family = Family::fixed_gaussian;
    std::vector<std::string> parents;     ///< sorted by name
    std::vector<std::string> covariates;  ///< continuous parents in design order
    /// Discrete parent entered as indicators with the first level dropped.
    std::optional<std::string> indicator;
    std::vector<std::string> indicator_levels;
    /// Discrete node whose levels index the random effects.
    std::optional<std::string> grouping;
    models::LocalModel model;
    double score = 0.0;

    std::size_t design_width() const {
        return covariates.size() + (indicator ? indicator_levels.size() - 1 : 0);
    }
};

/// DAG plus fitted local distributions (the network parameters).
struct FittedNetwork {
    graph::Dag dag;
    std::vector<NodeRole> roles;   ///< dag node order
    std::vector<NodeModel> nodes;  ///< dag node order
    std::size_t n_obs = 0;

    const NodeModel& node(std::string_view name) const { return nodes.at(dag.at(name)); }
    const NodeRole& role(std::string_view name) const { return roles.at(dag.at(name)); }
    /// Name of the multinomial root, if any.
    std::optional<std::string> cluster_node() const;
    /// The heteroscedastic node if present, otherwise nullopt.
    std::optional<std::string> target_node() const;
    double score() const;

    nlohmann::json to_json() const;
    static FittedNetwork from_json(const nlohmann::json& j);
};

/// Design values (without intercept) for `m` given per-node values.
/// `values` is indexed like the DAG; discrete nodes hold their level code
/// as a double, -1 for a level the model has not seen.
std::vector<double> design_values(const FittedNetwork& net, const NodeModel& m,
                                  std::span<const double> values);

/// Level index of `label` in the cluster levels of `m`, or -1.
int level_index(const NodeModel& m, std::string_view label);

}  // namespace hbnet
