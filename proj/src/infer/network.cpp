#include <algorithm>

#include "hbnet/error.hpp"
#include "hbnet/network.hpp"

namespace hbnet {

std::string_view to_string(Family f) {
    switch (f) {
        case Family::multinomial_root: return "multinomial_root";
        case Family::fixed_gaussian: return "fixed_gaussian";
        case Family::mixed_gaussian: return "mixed_gaussian";
        case Family::hetero_mixed_gaussian: return "hetero_mixed_gaussian";
    }
    return "?";
}

Family parse_family(std::string_view s) {
    for (auto f : {Family::multinomial_root, Family::fixed_gaussian, Family::mixed_gaussian,
                   Family::hetero_mixed_gaussian})
        if (to_string(f) == s) return f;
    throw ModelError("unknown family " + std::string(s));
}

std::vector<NodeRole> derive_roles(const data::Schema& schema) {
    std::vector<NodeRole> roles;
    for (const auto& c : schema.columns()) {
        using data::ColumnRole;
        if (c.role == ColumnRole::group_key) continue;
        if (c.role == ColumnRole::cluster) {
            roles.push_back({c.name, Family::multinomial_root, false});
            continue;
        }
        if (c.kind != data::ColumnKind::continuous)
            throw ModelError("network nodes other than the cluster must be continuous: " + c.name);
        switch (c.role) {
            case ColumnRole::target: roles.push_back({c.name, Family::hetero_mixed_gaussian, true}); break;
            case ColumnRole::phenological: roles.push_back({c.name, Family::mixed_gaussian, true}); break;
            default: roles.push_back({c.name, Family::fixed_gaussian, false}); break;
        }
    }
    validate_roles(roles);
    return roles;
}

std::vector<NodeRole> baseline_roles(std::vector<NodeRole> roles) {
    for (auto& r : roles) {
        if (r.family == Family::multinomial_root) continue;
        r.family = Family::fixed_gaussian;
        r.forced_cluster_parent = false;
    }
    return roles;
}

void validate_roles(const std::vector<NodeRole>& roles) {
    int roots = 0, hetero = 0;
    for (const auto& r : roles) {
        roots += r.family == Family::multinomial_root;
        hetero += r.family == Family::hetero_mixed_gaussian;
        const bool mixed = r.family == Family::mixed_gaussian || r.family == Family::hetero_mixed_gaussian;
        if (mixed != r.forced_cluster_parent)
            throw ModelError("role of " + r.node + ": forced cluster parent must match a mixed family");
    }
    if (roots != 1) throw ModelError("roles need exactly one multinomial_root (the cluster node)");
    if (hetero > 1) throw ModelError("at most one node may be hetero_mixed_gaussian");
}

std::optional<std::string> FittedNetwork::cluster_node() const {
    for (const auto& r : roles)
        if (r.family == Family::multinomial_root) return r.node;
    return std::nullopt;
}

std::optional<std::string> FittedNetwork::target_node() const {
    for (const auto& r : roles)
        if (r.family == Family::hetero_mixed_gaussian) return r.node;
    return std::nullopt;
}

double FittedNetwork::score() const {
    double s = 0.0;
    for (const auto& m : nodes) s += m.score;
    return s;
}

nlohmann::json FittedNetwork::to_json() const {
    using nlohmann::json;
    json j;
    j["n_obs"] = n_obs;
    j["nodes"] = dag.nodes();
    j["arcs"] = json::array();
    for (const auto& [p, c] : dag.arcs()) j["arcs"].push_back({p, c});
    j["roles"] = json::array();
    for (const auto& r : roles)
        j["roles"].push_back({{"node", r.node}, {"family", to_string(r.family)},
                              {"forced_cluster_parent", r.forced_cluster_parent}});
    j["local_models"] = json::array();
    for (const auto& m : nodes) {
        json e = {{"node", m.node},           {"family", to_string(m.family)}, {"parents", m.parents},
                  {"covariates", m.covariates}, {"score", m.score},            {"model", models::to_json(m.model)}};
        if (m.indicator) {
            e["indicator"] = *m.indicator;
            e["indicator_levels"] = m.indicator_levels;
        }
        if (m.grouping) e["grouping"] = *m.grouping;
        j["local_models"].push_back(std::move(e));
    }
    return j;
}

FittedNetwork FittedNetwork::from_json(const nlohmann::json& j) {
    try {
        FittedNetwork net;
        net.n_obs = j.at("n_obs").get<std::size_t>();
        std::vector<graph::Arc> arcs;
        for (const auto& a : j.at("arcs")) arcs.emplace_back(a.at(0).get<std::string>(), a.at(1).get<std::string>());
        net.dag = graph::Dag(j.at("nodes").get<std::vector<std::string>>(), arcs);
        for (const auto& r : j.at("roles"))
            net.roles.push_back({r.at("node").get<std::string>(), parse_family(r.at("family").get<std::string>()),
                                 r.at("forced_cluster_parent").get<bool>()});
        for (const auto& e : j.at("local_models")) {
            NodeModel m;
            m.node = e.at("node").get<std::string>();
            m.family = parse_family(e.at("family").get<std::string>());
            m.parents = e.at("parents").get<std::vector<std::string>>();
            m.covariates = e.at("covariates").get<std::vector<std::string>>();
            m.score = e.at("score").get<double>();
            m.model = models::from_json(e.at("model"));
            if (e.contains("indicator")) {
                m.indicator = e.at("indicator").get<std::string>();
                m.indicator_levels = e.at("indicator_levels").get<std::vector<std::string>>();
            }
            if (e.contains("grouping")) m.grouping = e.at("grouping").get<std::string>();
            net.nodes.push_back(std::move(m));
        }
        if (net.roles.size() != net.dag.size() || net.nodes.size() != net.dag.size())
            throw ModelError("model json: roles and local models must cover every node");
        for (std::size_t i = 0; i < net.dag.size(); ++i) {
            if (net.roles[i].node != net.dag.nodes()[i] || net.nodes[i].node != net.dag.nodes()[i])
                throw ModelError("model json: node order mismatch at " + net.dag.nodes()[i]);
            auto parents = net.dag.parents(net.dag.nodes()[i]);
            std::sort(parents.begin(), parents.end());
            if (parents != net.nodes[i].parents)
                throw ModelError("model json: parents of " + net.dag.nodes()[i] + " disagree with the arcs");
        }
        validate_roles(net.roles);
        return net;
    } catch (const nlohmann::json::exception& ex) {
        throw ModelError(std::string("model json: ") + ex.what());
    }
}

std::vector<double> design_values(const FittedNetwork& net, const NodeModel& m, std::span<const double> values) {
    std::vector<double> x;
    x.reserve(m.design_width());
    for (const auto& c : m.covariates) x.push_back(values[net.dag.at(c)]);
    if (m.indicator) {
        const auto code = static_cast<int>(values[net.dag.at(*m.indicator)]);
        for (std::size_t l = 1; l < m.indicator_levels.size(); ++l) x.push_back(code == static_cast<int>(l) ? 1.0 : 0.0);
    }
    return x;
}

int level_index(const NodeModel& m, std::string_view label) {
    const std::vector<std::string>* levels = models::cluster_levels(m.model);
    if (m.indicator) levels = &m.indicator_levels;
    if (const auto* mn = std::get_if<models::Multinomial>(&m.model)) levels = &mn->levels;
    if (!levels) return -1;
    auto it = std::find(levels->begin(), levels->end(), label);
    return it == levels->end() ? -1 : static_cast<int>(it - levels->begin());
}

}  // namespace hbnet
