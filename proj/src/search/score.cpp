#include <algorithm>
#include <map>

#include "hbnet/error.hpp"
#include "hbnet/search.hpp"

namespace hbnet::search {

namespace {

const NodeRole& role_of(const std::vector<NodeRole>& roles, const std::string& node) {
    for (const auto& r : roles)
        if (r.node == node) return r;
    throw ModelError("no role for node " + node);
}

std::optional<std::string> root_of(const std::vector<NodeRole>& roles) {
    for (const auto& r : roles)
        if (r.family == Family::multinomial_root) return r.node;
    return std::nullopt;
}

}  // namespace

NodeModel fit_node(const std::string& node, std::vector<std::string> parents, const data::Dataset& ds,
                   const std::vector<NodeRole>& roles) {
    std::sort(parents.begin(), parents.end());
    const NodeRole& role = role_of(roles, node);
    const auto root = root_of(roles);
    NodeModel m;
    m.node = node;
    m.family = role.family;
    m.parents = parents;

    if (role.family == Family::multinomial_root) {
        if (!parents.empty()) throw ModelError("multinomial root " + node + " cannot have parents");
        const auto& col = ds.column(node);
        if (col.spec.kind != data::ColumnKind::discrete) throw ModelError("root node " + node + " must be discrete");
        m.model = models::fit_multinomial(col.codes, col.levels);
        m.score = models::node_bic(m.model, ds.n_rows());
        return m;
    }

    const bool mixed = role.family != Family::fixed_gaussian;
    for (const auto& p : parents) {
        if (p == node) throw ModelError("node " + node + " cannot be its own parent");
        const auto& spec = ds.schema().at(p);
        if (spec.kind == data::ColumnKind::continuous) {
            m.covariates.push_back(p);
        } else if (root && p == *root && mixed) {
            // enters as the grouping factor below
        } else if (!m.indicator) {
            m.indicator = p;
            m.indicator_levels = ds.column(p).levels;
        } else {
            throw ModelError("node " + node + " has more than one discrete indicator parent");
        }
    }
    if (mixed) {
        if (!root) throw ModelError("mixed node " + node + " needs a cluster node");
        m.grouping = *root;
    }

    const auto n = static_cast<Eigen::Index>(ds.n_rows());
    auto yv = ds.continuous(node);
    const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(yv.data(), n);
    Eigen::MatrixXd X(n, static_cast<Eigen::Index>(m.design_width()) + 1);
    std::vector<std::string> names{"(intercept)"};
    X.col(0).setOnes();
    Eigen::Index col = 1;
    for (const auto& c : m.covariates) {
        auto v = ds.continuous(c);
        X.col(col++) = Eigen::Map<const Eigen::VectorXd>(v.data(), n);
        names.push_back(c);
    }
    if (m.indicator) {
        const auto& codes = ds.column(*m.indicator).codes;
        for (std::size_t l = 1; l < m.indicator_levels.size(); ++l) {
            for (Eigen::Index i = 0; i < n; ++i) X(i, col) = codes[static_cast<std::size_t>(i)] == static_cast<int>(l) ? 1.0 : 0.0;
            ++col;
            names.push_back(*m.indicator + "=" + m.indicator_levels[l]);
        }
    }

    switch (role.family) {
        case Family::fixed_gaussian: m.model = models::fit_ols(y, X, names); break;
        case Family::mixed_gaussian:
        case Family::hetero_mixed_gaussian: {
            const auto& g = ds.column(*m.grouping);
            models::Grouping grouping{g.codes, g.levels};
            if (role.family == Family::mixed_gaussian)
                m.model = models::fit_lme(y, X, grouping);
            else
                m.model = models::fit_lme_hetero(y, X, grouping);
            break;
        }
        case Family::multinomial_root: break;
    }
    m.score = models::node_bic(m.model, ds.n_rows());
    return m;
}

std::optional<NodeModel> ScoreCache::find(const std::string& node, std::vector<std::string> parents) const {
    std::sort(parents.begin(), parents.end());
    std::lock_guard lock(mutex_);
    auto it = entries_.find({node, parents});
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void ScoreCache::insert(NodeModel m) {
    Key key{m.node, m.parents};
    std::lock_guard lock(mutex_);
    if (entries_.emplace(std::move(key), std::move(m)).second) ++fits_;
}

std::size_t ScoreCache::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

double score_node(const std::string& node, const std::vector<std::string>& parents, const data::Dataset& ds,
                  const std::vector<NodeRole>& roles, ScoreCache& cache) {
    if (auto hit = cache.find(node, parents)) return hit->score;
    NodeModel m = fit_node(node, parents, ds, roles);
    const double s = m.score;
    cache.insert(std::move(m));
    return s;
}

double network_score(const graph::Dag& g, const data::Dataset& ds, const std::vector<NodeRole>& roles,
                     ScoreCache& cache) {
    double total = 0.0;
    for (const auto& v : g.nodes()) total += score_node(v, g.parents(v), ds, roles, cache);
    return total;
}

graph::ConstraintSet role_constraints(const std::vector<NodeRole>& roles, const graph::ConstraintSet& user) {
    validate_roles(roles);
    graph::ConstraintSet c = user;
    const std::string root = *root_of(roles);
    for (const auto& r : roles) {
        if (r.node == root) continue;
        c.blacklist.emplace(r.node, root);
        if (r.forced_cluster_parent)
            c.whitelist.emplace(root, r.node);
        else
            c.blacklist.emplace(root, r.node);
    }
    for (const auto& a : c.whitelist)
        if (c.blacklist.count(a))
            throw ModelError("constraints: arc " + a.first + " -> " + a.second + " conflicts with the node roles");
    return c;
}

FittedNetwork fit_network(const graph::Dag& g, const data::Dataset& ds, const std::vector<NodeRole>& roles,
                          ScoreCache* cache) {
    ScoreCache local;
    ScoreCache& c = cache ? *cache : local;
    FittedNetwork net;
    net.dag = g;
    net.n_obs = ds.n_rows();
    for (const auto& v : g.nodes()) {
        net.roles.push_back(role_of(roles, v));
        auto parents = g.parents(v);
        if (auto hit = c.find(v, parents)) {
            net.nodes.push_back(std::move(*hit));
        } else {
            NodeModel m = fit_node(v, parents, ds, roles);
            c.insert(m);
            net.nodes.push_back(std::move(m));
        }
    }
    return net;
}

}  // namespace hbnet::search
