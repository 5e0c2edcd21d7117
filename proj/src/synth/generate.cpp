#include <cmath>
#include <fstream>
#include <set>

#include "hbnet/error.hpp"
#include "hbnet/rng.hpp"
#include "hbnet/synth.hpp"

namespace hbnet::synth {

namespace {

bool is_mixed(Family f) { return f == Family::mixed_gaussian || f == Family::hetero_mixed_gaussian; }

/// Symmetric square root of a PSD matrix (negative eigenvalues clipped).
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

void NetSpec::validate() const {
    if (cluster_probs.empty()) throw ModelError("net spec: cluster_probs is empty");
    double total = 0.0;
    for (double p : cluster_probs) {
        if (!(p >= 0.0)) throw ModelError("net spec: cluster_probs must be non-negative");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ModelError("net spec: cluster_probs must sum to 1");
    if (groups_per_cluster < 1) throw ModelError("net spec: groups_per_cluster must be >= 1");
    const std::size_t J = n_clusters();

    std::set<std::string> names{cluster, group_key};
    if (names.size() != 2) throw ModelError("net spec: cluster and group_key names must differ");
    int targets = 0;
    for (const auto& nd : nodes) {
        if (!names.insert(nd.name).second) throw ModelError("net spec: duplicate node " + nd.name);
        if (nd.family == Family::multinomial_root) throw ModelError("net spec: only the cluster node is discrete");
        if (nd.role == data::ColumnRole::group_key || nd.role == data::ColumnRole::cluster)
            throw ModelError("net spec: node " + nd.name + " needs a target, phenological or weather role");
        targets += nd.role == data::ColumnRole::target;
        if (nd.betas.size() != nd.parents.size())
            throw ModelError("net spec: node " + nd.name + " has " + std::to_string(nd.parents.size()) +
                             " parents but " + std::to_string(nd.betas.size()) + " betas");
        if (!(nd.sigma2 >= 0.0)) throw ModelError("net spec: sigma2 of " + nd.name + " must be non-negative");
        if (nd.family == Family::mixed_gaussian) {
            const auto q = static_cast<Eigen::Index>(nd.parents.size() + 1);
            if (nd.re_cov.rows() != q || nd.re_cov.cols() != q)
                throw ModelError("net spec: re_cov of " + nd.name + " must be " + std::to_string(q) + "x" + std::to_string(q));
            if (!nd.re_cov.isApprox(nd.re_cov.transpose()))
                throw ModelError("net spec: re_cov of " + nd.name + " is not symmetric");
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(nd.re_cov);
            if (es.eigenvalues().minCoeff() < -1e-10) throw ModelError("net spec: re_cov of " + nd.name + " is not PSD");
        }
        if (nd.family == Family::hetero_mixed_gaussian) {
            if (!(nd.sigma2_b >= 0.0)) throw ModelError("net spec: sigma2_b of " + nd.name + " must be non-negative");
            if (nd.theta.size() != J)
                throw ModelError("net spec: theta of " + nd.name + " needs one entry per cluster");
        }
    }
    if (targets != 1) throw ModelError("net spec: exactly one node must have the target role");
    dag();
}

graph::Dag NetSpec::dag() const {
    std::vector<std::string> names{cluster};
    std::vector<graph::Arc> arcs;
    for (const auto& nd : nodes) names.push_back(nd.name);
    for (const auto& nd : nodes) {
        if (is_mixed(nd.family)) arcs.emplace_back(cluster, nd.name);
        for (const auto& p : nd.parents) {
            if (p == cluster) throw ModelError("net spec: list the cluster implicitly via a mixed family, not as a parent");
            arcs.emplace_back(p, nd.name);
        }
    }
    return graph::Dag(names, arcs);
}

std::vector<NodeRole> NetSpec::roles() const {
    std::vector<NodeRole> out{{cluster, Family::multinomial_root, false}};
    for (const auto& nd : nodes) out.push_back({nd.name, nd.family, is_mixed(nd.family)});
    return out;
}

data::Schema NetSpec::schema() const {
    std::vector<data::ColumnSpec> cols{{group_key, data::ColumnKind::discrete, data::ColumnRole::group_key},
                                       {cluster, data::ColumnKind::discrete, data::ColumnRole::cluster}};
    for (const auto& nd : nodes) cols.push_back({nd.name, data::ColumnKind::continuous, nd.role});
    return data::Schema(cols);
}

NetSpec NetSpec::from_json(const nlohmann::json& j) {
    try {
        NetSpec s;
        s.cluster = j.value("cluster", std::string("F"));
        s.cluster_probs = j.at("cluster_probs").get<std::vector<double>>();
        s.groups_per_cluster = j.value("groups_per_cluster", std::size_t{1});
        s.group_key = j.value("group_key", std::string("group"));
        for (const auto& e : j.at("nodes")) {
            NodeSpec nd;
            nd.name = e.at("name").get<std::string>();
            nd.role = data::parse_role(e.value("role", std::string("phenological")));
            const std::string fallback = nd.role == data::ColumnRole::target        ? "hetero_mixed_gaussian"
                                         : nd.role == data::ColumnRole::phenological ? "mixed_gaussian"
                                                                                     : "fixed_gaussian";
            nd.family = parse_family(e.value("family", fallback));
            nd.parents = e.value("parents", std::vector<std::string>{});
            nd.intercept = e.value("intercept", 0.0);
            nd.betas = e.value("betas", std::vector<double>{});
            nd.sigma2 = e.value("sigma2", 1.0);
            nd.sigma2_b = e.value("sigma2_b", 0.0);
            nd.theta = e.value("theta", std::vector<double>{});
            if (nd.family == Family::mixed_gaussian) {
                const auto q = static_cast<Eigen::Index>(nd.parents.size() + 1);
                nd.re_cov = Eigen::MatrixXd::Zero(q, q);
                if (e.contains("re_cov")) {
                    const auto rows = e.at("re_cov").get<std::vector<std::vector<double>>>();
                    nd.re_cov.resize(static_cast<Eigen::Index>(rows.size()),
                                     rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size()));
                    for (std::size_t r = 0; r < rows.size(); ++r) {
                        if (rows[r].size() != rows[0].size()) throw ModelError("net spec: ragged re_cov");
                        for (std::size_t c = 0; c < rows[r].size(); ++c)
                            nd.re_cov(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
                    }
                } else {
                    nd.re_cov(0, 0) = nd.sigma2_b;
                }
            }
            if (nd.family == Family::hetero_mixed_gaussian && nd.theta.empty())
                nd.theta.assign(s.cluster_probs.size(), 0.0);
            s.nodes.push_back(std::move(nd));
        }
        s.validate();
        return s;
    } catch (const nlohmann::json::exception& ex) {
        throw ModelError(std::string("net spec: ") + ex.what());
    } catch (const DataError& ex) {
        throw ModelError(std::string("net spec: ") + ex.what());
    }
}

nlohmann::json NetSpec::to_json() const {
    using nlohmann::json;
    json j = {{"cluster", cluster},
              {"cluster_probs", cluster_probs},
              {"groups_per_cluster", groups_per_cluster},
              {"group_key", group_key},
              {"nodes", json::array()}};
    for (const auto& nd : nodes) {
        json e = {{"name", nd.name},          {"role", data::to_string(nd.role)},
                  {"family", to_string(nd.family)}, {"parents", nd.parents},
                  {"intercept", nd.intercept}, {"betas", nd.betas},
                  {"sigma2", nd.sigma2}};
        if (nd.family == Family::mixed_gaussian) {
            json rows = json::array();
            for (Eigen::Index r = 0; r < nd.re_cov.rows(); ++r) {
                json row = json::array();
                for (Eigen::Index c = 0; c < nd.re_cov.cols(); ++c) row.push_back(nd.re_cov(r, c));
                rows.push_back(row);
            }
            e["re_cov"] = rows;
        }
        if (nd.family == Family::hetero_mixed_gaussian) {
            e["sigma2_b"] = nd.sigma2_b;
            e["theta"] = nd.theta;
        }
        j["nodes"].push_back(std::move(e));
    }
    return j;
}

NetSpec load_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open spec file " + path);
    try {
        return NetSpec::from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& ex) {
        throw DataError("spec file " + path + ": " + ex.what());
    }
}

data::Dataset generate(const NetSpec& spec, std::span<const std::size_t> n_per_cluster, std::uint64_t seed) {
    spec.validate();
    const std::size_t J = spec.n_clusters();
    if (n_per_cluster.size() != J)
        throw ModelError("generate: need " + std::to_string(J) + " cluster sizes, got " + std::to_string(n_per_cluster.size()));
    std::size_t n = 0;
    for (auto c : n_per_cluster) n += c;
    if (n == 0) throw ModelError("generate: no rows requested");

    const graph::Dag g = spec.dag();
    const std::size_t K = spec.nodes.size();
    // DAG index i + 1 is spec.nodes[i]; index 0 is the cluster.
    std::vector<std::vector<std::size_t>> parent_idx(K);
    for (std::size_t k = 0; k < K; ++k)
        for (const auto& p : spec.nodes[k].parents) parent_idx[k].push_back(g.at(p) - 1);
    std::vector<std::size_t> order;
    for (auto i : graph::topological_indices(g))
        if (i != 0) order.push_back(i - 1);

    // Random effects: effects[j][k] holds (b0, b_1..b_p) of node k in cluster j.
    Rng re_rng(derive_seed(seed, 1));
    std::vector<std::vector<Eigen::VectorXd>> effects(J, std::vector<Eigen::VectorXd>(K));
    std::vector<Eigen::MatrixXd> roots(K);
    for (std::size_t k = 0; k < K; ++k)
        if (spec.nodes[k].family == Family::mixed_gaussian) roots[k] = psd_sqrt(spec.nodes[k].re_cov);
    for (std::size_t j = 0; j < J; ++j) {
        for (std::size_t k = 0; k < K; ++k) {
            const auto& nd = spec.nodes[k];
            Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nd.parents.size() + 1));
            if (nd.family == Family::mixed_gaussian) {
                Eigen::VectorXd z(b.size());
                for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = re_rng.normal();
                b = roots[k] * z;
            } else if (nd.family == Family::hetero_mixed_gaussian) {
                b(0) = std::sqrt(nd.sigma2_b) * re_rng.normal();
            }
            effects[j][k] = std::move(b);
        }
    }

    Rng rng(derive_seed(seed, 2));
    std::vector<std::vector<double>> values(K, std::vector<double>(n));
    std::vector<int> cluster_codes(n), group_codes(n);
    std::vector<double> row(K);
    std::size_t r = 0;
    for (std::size_t j = 0; j < J; ++j) {
        for (std::size_t i = 0; i < n_per_cluster[j]; ++i, ++r) {
            cluster_codes[r] = static_cast<int>(j);
            group_codes[r] = static_cast<int>(j * spec.groups_per_cluster + i % spec.groups_per_cluster);
            for (auto k : order) {
                const auto& nd = spec.nodes[k];
                const Eigen::VectorXd& b = effects[j][k];
                double mean = nd.intercept + b(0);
                for (std::size_t p = 0; p < nd.parents.size(); ++p)
                    mean += (nd.betas[p] + b(static_cast<Eigen::Index>(p) + 1)) * row[parent_idx[k][p]];
                double sd = std::sqrt(nd.sigma2);
                if (nd.family == Family::hetero_mixed_gaussian) sd *= std::pow(std::abs(mean), nd.theta[j]);
                row[k] = mean + sd * rng.normal();
                values[k][r] = row[k];
            }
        }
    }

    std::vector<std::string> cluster_levels, group_levels;
    for (std::size_t j = 0; j < J; ++j) cluster_levels.push_back(std::to_string(j + 1));
    for (std::size_t g2 = 0; g2 < J * spec.groups_per_cluster; ++g2) group_levels.push_back(std::to_string(g2 + 1));

    const data::Schema schema = spec.schema();
    std::vector<data::Column> cols;
    cols.push_back(data::Column::discrete_coded(schema.columns()[0], std::move(group_codes), group_levels));
    cols.push_back(data::Column::discrete_coded(schema.columns()[1], std::move(cluster_codes), cluster_levels));
    for (std::size_t k = 0; k < K; ++k)
        cols.push_back(data::Column::continuous(schema.columns()[k + 2], std::move(values[k])));
    return data::Dataset(schema, std::move(cols));
}

data::Dataset generate(const NetSpec& spec, std::size_t n, std::uint64_t seed) {
    spec.validate();
    Rng rng(derive_seed(seed, 0));
    std::vector<std::size_t> counts(spec.n_clusters(), 0);
    for (std::size_t i = 0; i < n; ++i) ++counts[categorical(rng, std::span<const double>(spec.cluster_probs))];
    return generate(spec, counts, seed);
}

}  // namespace hbnet::synth
