#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hbnet/data.hpp"
#include "hbnet/models.hpp"
#include "hbnet/network.hpp"
#include "hbnet/rng.hpp"
#include "hbnet/synth.hpp"

namespace testing {

using hbnet::data::ColumnKind;
using hbnet::data::ColumnRole;
using hbnet::data::ColumnSpec;

inline hbnet::data::Column cont(const std::string& name, std::vector<double> v,
                                ColumnRole role = ColumnRole::phenological) {
    return hbnet::data::Column::continuous({name, ColumnKind::continuous, role}, std::move(v));
}

inline hbnet::data::Column disc(const std::string& name, const std::vector<std::string>& v,
                                ColumnRole role = ColumnRole::group_key) {
    return hbnet::data::Column::discrete({name, ColumnKind::discrete, role}, v);
}

inline hbnet::data::Dataset make_dataset(std::vector<hbnet::data::Column> cols) {
    std::vector<ColumnSpec> specs;
    for (const auto& c : cols) specs.push_back(c.spec);
    return hbnet::data::Dataset(hbnet::data::Schema(specs), std::move(cols));
}

/// Network of fixed_gaussian nodes plus an isolated one-level root "F".
/// B(p, c) is the coefficient of node p in node c (p < c in `names`).
inline hbnet::FittedNetwork gaussian_network(const std::vector<std::string>& names, const Eigen::MatrixXd& B,
                                             const Eigen::VectorXd& intercept, const Eigen::VectorXd& sigma2) {
    std::vector<std::string> nodes{"F"};
    nodes.insert(nodes.end(), names.begin(), names.end());
    std::vector<hbnet::graph::Arc> arcs;
    for (Eigen::Index p = 0; p < B.rows(); ++p)
        for (Eigen::Index c = 0; c < B.cols(); ++c)
            if (B(p, c) != 0.0) arcs.emplace_back(names[p], names[c]);
    hbnet::FittedNetwork net;
    net.dag = hbnet::graph::Dag(nodes, arcs);
    net.n_obs = 100;
    net.roles.push_back({"F", hbnet::Family::multinomial_root, false});
    hbnet::NodeModel root;
    root.node = "F";
    root.family = hbnet::Family::multinomial_root;
    root.model = hbnet::models::Multinomial{{"1"}, {1.0}, 0.0, 0};
    net.nodes.push_back(root);
    for (std::size_t i = 0; i < names.size(); ++i) {
        net.roles.push_back({names[i], hbnet::Family::fixed_gaussian, false});
        hbnet::NodeModel m;
        m.node = names[i];
        m.family = hbnet::Family::fixed_gaussian;
        m.parents = net.dag.parents(names[i]);
        std::sort(m.parents.begin(), m.parents.end());
        m.covariates = m.parents;
        hbnet::models::FixedGaussian fg;
        fg.intercept = intercept(static_cast<Eigen::Index>(i));
        fg.sigma2 = sigma2(static_cast<Eigen::Index>(i));
        for (const auto& p : m.covariates) {
            const auto pi = std::find(names.begin(), names.end(), p) - names.begin();
            fg.betas.push_back(B(pi, static_cast<Eigen::Index>(i)));
        }
        fg.n_params = static_cast<int>(fg.betas.size()) + 2;
        m.model = fg;
        net.nodes.push_back(m);
    }
    return net;
}

/// Six continuous nodes W1, W2 (weather), P1, P2, P3 (phenological) and Y
/// (target) over J clusters with random intercepts of variance sigma2_b.
inline hbnet::synth::NetSpec six_node_spec(std::size_t J, double sigma2_b, double sigma2 = 1.0) {
    hbnet::synth::NetSpec s;
    s.cluster_probs.assign(J, 1.0 / static_cast<double>(J));
    using hbnet::Family;
    auto mixed = [&](double scale) {
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2, 2);
        m(0, 0) = sigma2_b * scale;
        return m;
    };
    hbnet::synth::NodeSpec w1{"W1", ColumnRole::weather, Family::fixed_gaussian, {}, 20.0, {}, 4.0, {}, 0.0, {}};
    hbnet::synth::NodeSpec w2{"W2", ColumnRole::weather, Family::fixed_gaussian, {"W1"}, 5.0, {0.5}, sigma2, {}, 0.0, {}};
    hbnet::synth::NodeSpec p1{"P1", ColumnRole::phenological, Family::mixed_gaussian, {"W1"}, 10.0, {1.0}, sigma2, mixed(1.0), 0.0, {}};
    hbnet::synth::NodeSpec p2{"P2", ColumnRole::phenological, Family::mixed_gaussian, {"W2"}, 30.0, {-1.5}, sigma2, mixed(1.0), 0.0, {}};
    hbnet::synth::NodeSpec p3{"P3", ColumnRole::phenological, Family::mixed_gaussian, {"P1"}, 2.0, {0.8}, sigma2, mixed(0.5), 0.0, {}};
    hbnet::synth::NodeSpec y{"Y", ColumnRole::target, Family::hetero_mixed_gaussian, {"P2", "P3"}, 40.0, {1.0, 1.2},
                             sigma2, {}, 2.0 * sigma2_b, std::vector<double>(J, 0.0)};
    s.nodes = {w1, w2, p1, p2, p3, y};
    return s;
}

/// Random hierarchical spec: `n` nodes N0..N{n-1} in a random DAG respecting
/// index order, N{n-1} the target, roughly half of the rest phenological.
inline hbnet::synth::NetSpec random_spec(hbnet::Rng& rng, std::size_t n, std::size_t J) {
    hbnet::synth::NetSpec s;
    s.cluster_probs.assign(J, 1.0 / static_cast<double>(J));
    for (std::size_t i = 0; i < n; ++i) {
        hbnet::synth::NodeSpec nd;
        nd.name = "N" + std::to_string(i);
        const bool target = i + 1 == n;
        const bool pheno = !target && rng.uniform() < 0.5;
        nd.role = target ? ColumnRole::target : pheno ? ColumnRole::phenological : ColumnRole::weather;
        nd.family = target  ? hbnet::Family::hetero_mixed_gaussian
                    : pheno ? hbnet::Family::mixed_gaussian
                            : hbnet::Family::fixed_gaussian;
        for (std::size_t p = 0; p < i; ++p)
            if (rng.uniform() < 0.4) {
                nd.parents.push_back("N" + std::to_string(p));
                nd.betas.push_back((rng.uniform() < 0.5 ? -1.0 : 1.0) * (0.3 + rng.uniform()));
            }
        nd.intercept = target ? 50.0 : 5.0 * rng.normal();
        nd.sigma2 = 0.5 + rng.uniform();
        if (pheno) {
            const auto q = static_cast<Eigen::Index>(nd.parents.size() + 1);
            nd.re_cov = Eigen::MatrixXd::Zero(q, q);
            nd.re_cov(0, 0) = 2.0 * rng.uniform();
        }
        if (target) {
            nd.sigma2_b = 2.0 * rng.uniform();
            nd.theta.assign(J, 0.0);
        }
        s.nodes.push_back(nd);
    }
    return s;
}

}  // namespace testing
