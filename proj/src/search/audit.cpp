#include <algorithm>
#include <cmath>

#include "hbnet/error.hpp"
#include "hbnet/search.hpp"

namespace hbnet::search {

namespace {

AuditRow audit_row(std::string removed, const NodeModel& m, std::size_t n) {
    const double ll = models::loglik(m.model);
    const int k = models::n_params(m.model);
    const double logn = std::log(static_cast<double>(n));
    return {std::move(removed), ll, k, ll - 0.5 * k * logn, -2.0 * ll + k * logn};
}

}  // namespace

AuditTable backward_eliminate(const std::string& node, const std::vector<std::string>& parents,
                              const data::Dataset& ds, const std::vector<NodeRole>& roles) {
    AuditTable t;
    t.node = node;
    t.parents = parents;
    std::sort(t.parents.begin(), t.parents.end());

    std::string root;
    for (const auto& r : roles)
        if (r.family == Family::multinomial_root) root = r.node;
    std::vector<std::string> removable;
    for (const auto& p : t.parents)
        if (p != root) removable.push_back(p);

    std::vector<NodeRole> fixed_roles = roles;
    for (auto& r : fixed_roles)
        if (r.node == node) {
            r.family = Family::fixed_gaussian;
            r.forced_cluster_parent = false;
        }

    const std::size_t n = ds.n_rows();
    auto without = [](const std::vector<std::string>& v, const std::string& drop) {
        std::vector<std::string> out;
        for (const auto& x : v)
            if (x != drop) out.push_back(x);
        return out;
    };

    t.with_random_effects.push_back(audit_row("", fit_node(node, t.parents, ds, roles), n));
    t.fixed_only.push_back(audit_row("", fit_node(node, removable, ds, fixed_roles), n));
    for (const auto& p : removable) {
        t.with_random_effects.push_back(audit_row(p, fit_node(node, without(t.parents, p), ds, roles), n));
        t.fixed_only.push_back(audit_row(p, fit_node(node, without(removable, p), ds, fixed_roles), n));
    }
    return t;
}

std::vector<BicRow> bic_table(const FittedNetwork& net) {
    std::vector<BicRow> out;
    const double logn = std::log(static_cast<double>(net.n_obs));
    for (const auto& m : net.nodes) {
        const double ll = models::loglik(m.model);
        const int k = models::n_params(m.model);
        out.push_back({m.node, m.family, m.parents, ll, k, ll - 0.5 * k * logn, -2.0 * ll + k * logn});
    }
    return out;
}

}  // namespace hbnet::search
