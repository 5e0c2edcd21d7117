#include <algorithm>
#include <cmath>
#include <limits>

#include "hbnet/cluster.hpp"
#include "hbnet/error.hpp"
#include "hbnet/logging.hpp"
#include "silhouette_detail.hpp"

namespace hbnet::cluster {

namespace {

Eigen::MatrixXd raw_features(const std::vector<ResidualStats>& stats) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(stats.size()), 2);
    for (std::size_t i = 0; i < stats.size(); ++i) {
        x(static_cast<Eigen::Index>(i), 0) = stats[i].mean;
        x(static_cast<Eigen::Index>(i), 1) = stats[i].sd;
    }
    return x;
}

Eigen::MatrixXd label_centroids(const Eigen::MatrixXd& points, const std::vector<int>& labels, std::size_t k) {
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), points.cols());
    std::vector<double> count(k, 0.0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto l = static_cast<std::size_t>(labels[i] - 1);
        c.row(static_cast<Eigen::Index>(l)) += points.row(static_cast<Eigen::Index>(i));
        count[l] += 1.0;
    }
    for (std::size_t l = 0; l < k; ++l) c.row(static_cast<Eigen::Index>(l)) /= count[l];
    return c;
}

}  // namespace

Standardizer Standardizer::fit(const Eigen::MatrixXd& x) {
    Standardizer s;
    const auto n = static_cast<double>(x.rows());
    s.mean = x.colwise().mean();
    s.sd.resize(x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        const double ss = (x.col(c).array() - s.mean(c)).square().sum();
        const double sd = n > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
        s.sd(c) = sd > 0.0 ? sd : 1.0;
    }
    return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& x) const {
    return (x.rowwise() - mean).array().rowwise() / sd.array();
}

std::vector<std::string> ClusterModel::levels() const {
    std::vector<std::string> out;
    for (std::size_t l = 1; l <= k; ++l) out.push_back(std::to_string(l));
    return out;
}

ClusterModel fit_clusters(const data::Dataset& ds, const ClusterOptions& options) {
    ClusterModel m;
    m.group_columns = ds.schema().names_with_role(data::ColumnRole::group_key);
    if (m.group_columns.empty()) throw DataError("clustering needs at least one group_key column");
    m.regression = fit_pooled_regression(ds, ds.schema().target().name);
    const Eigen::VectorXd res = m.regression.residuals(ds);
    m.stats = group_stats(std::span<const double>(res.data(), static_cast<std::size_t>(res.size())), ds);

    const std::size_t G = m.stats.size();
    if (G < 2) throw DataError("clustering needs at least 2 distinct groups");
    const Eigen::MatrixXd raw = raw_features(m.stats);
    if (options.standardize) {
        m.scaler = Standardizer::fit(raw);
    } else {
        m.scaler.mean = Eigen::RowVectorXd::Zero(raw.cols());
        m.scaler.sd = Eigen::RowVectorXd::Ones(raw.cols());
    }
    m.points = m.scaler.apply(raw);
    m.dendrogram = ward_linkage(m.points);

    if (options.k) {
        if (*options.k < 2 || *options.k > G)
            throw DataError("clusters must lie in [2, " + std::to_string(G) + "]");
        m.k = *options.k;
    } else if (G == 2) {
        m.k = 2;
    } else {
        const Eigen::MatrixXd D = detail::pairwise_distances(m.points);
        const std::size_t hi = std::min(std::max<std::size_t>(options.max_k, 2), G - 1);
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 2; k <= hi; ++k) {
            const auto labels = cut_tree(m.dendrogram, k);
            const double s = detail::silhouette_from_distances(D, labels);
            m.silhouette_by_k.emplace_back(k, s);
            if (s > best) {
                best = s;
                m.k = k;
            }
        }
        log::info("selected " + std::to_string(m.k) + " clusters by silhouette");
    }
    m.labels = cut_tree(m.dendrogram, m.k);
    m.centroids = label_centroids(m.points, m.labels, m.k);
    return m;
}

std::vector<int> ClusterModel::assign(const data::Dataset& ds) const {
    if (ds.schema().names_with_role(data::ColumnRole::group_key) != group_columns)
        throw DataError("cluster assignment: group_key columns differ from the fitted model");
    const Eigen::VectorXd res = regression.residuals(ds);
    const auto st = group_stats(std::span<const double>(res.data(), static_cast<std::size_t>(res.size())), ds);
    const Eigen::MatrixXd pts = scaler.apply(raw_features(st));

    std::vector<int> out(st.size(), 0);
    for (std::size_t g = 0; g < st.size(); ++g) {
        auto it = std::lower_bound(stats.begin(), stats.end(), st[g].group,
                                   [](const ResidualStats& s, const data::GroupKey& key) { return s.group < key; });
        if (it != stats.end() && it->group == st[g].group) {
            out[g] = labels[static_cast<std::size_t>(it - stats.begin())];
            continue;
        }
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
            const double d = (pts.row(static_cast<Eigen::Index>(g)) - centroids.row(c)).squaredNorm();
            if (d < best) {
                best = d;
                out[g] = static_cast<int>(c) + 1;
            }
        }
    }
    return out;
}

data::Dataset add_cluster_column(const data::Dataset& ds, const ClusterModel& model, const std::string& name) {
    const auto group_labels = model.assign(ds);
    const auto groups = ds.groups();
    std::vector<int> codes(ds.n_rows());
    for (std::size_t r = 0; r < ds.n_rows(); ++r) codes[r] = group_labels[groups.row_group[r]] - 1;

    data::Dataset base = ds;
    if (auto existing = ds.schema().cluster_column(); existing && *existing != name)
        base = base.without_column(*existing);
    return base.with_column(data::Column::discrete_coded(
        {name, data::ColumnKind::discrete, data::ColumnRole::cluster}, std::move(codes), model.levels()));
}

nlohmann::json ClusterModel::to_json() const {
    using nlohmann::json;
    json groups = json::array();
    for (std::size_t g = 0; g < stats.size(); ++g)
        groups.push_back({{"key", stats[g].group}, {"mean", stats[g].mean}, {"sd", stats[g].sd},
                          {"count", stats[g].count}, {"label", labels[g]}});
    json cents = json::array();
    for (Eigen::Index c = 0; c < centroids.rows(); ++c) cents.push_back({centroids(c, 0), centroids(c, 1)});
    json sil = json::array();
    for (auto [kk, s] : silhouette_by_k) sil.push_back({{"k", kk}, {"silhouette", s}});
    return {{"target", regression.target},
            {"covariates", regression.covariates},
            {"coef", std::vector<double>(regression.coef.data(), regression.coef.data() + regression.coef.size())},
            {"group_columns", group_columns},
            {"scaler_mean", {scaler.mean(0), scaler.mean(1)}},
            {"scaler_sd", {scaler.sd(0), scaler.sd(1)}},
            {"k", k},
            {"groups", groups},
            {"centroids", cents},
            {"silhouette", sil},
            {"dendrogram", dendrogram.to_json()}};
}

ClusterModel ClusterModel::from_json(const nlohmann::json& j) {
    try {
        ClusterModel m;
        m.regression.target = j.at("target").get<std::string>();
        m.regression.covariates = j.at("covariates").get<std::vector<std::string>>();
        const auto coef = j.at("coef").get<std::vector<double>>();
        if (coef.size() != m.regression.covariates.size() + 1)
            throw ModelError("cluster model: coefficient count mismatch");
        m.regression.coef = Eigen::Map<const Eigen::VectorXd>(coef.data(), static_cast<Eigen::Index>(coef.size()));
        m.group_columns = j.at("group_columns").get<std::vector<std::string>>();
        const auto mu = j.at("scaler_mean").get<std::vector<double>>();
        const auto sd = j.at("scaler_sd").get<std::vector<double>>();
        m.scaler.mean = Eigen::RowVectorXd::Map(mu.data(), 2);
        m.scaler.sd = Eigen::RowVectorXd::Map(sd.data(), 2);
        m.k = j.at("k").get<std::size_t>();
        for (const auto& g : j.at("groups")) {
            m.stats.push_back({g.at("key").get<data::GroupKey>(), g.at("mean").get<double>(),
                               g.at("sd").get<double>(), g.at("count").get<std::size_t>()});
            m.labels.push_back(g.at("label").get<int>());
        }
        m.points = m.scaler.apply(raw_features(m.stats));
        const auto& cents = j.at("centroids");
        if (cents.size() != m.k) throw ModelError("cluster model: centroid count mismatch");
        m.centroids.resize(static_cast<Eigen::Index>(m.k), 2);
        for (std::size_t c = 0; c < m.k; ++c) {
            m.centroids(static_cast<Eigen::Index>(c), 0) = cents[c].at(0).get<double>();
            m.centroids(static_cast<Eigen::Index>(c), 1) = cents[c].at(1).get<double>();
        }
        if (j.contains("silhouette"))
            for (const auto& s : j.at("silhouette"))
                m.silhouette_by_k.emplace_back(s.at("k").get<std::size_t>(), s.at("silhouette").get<double>());
        if (j.contains("dendrogram")) {
            const auto& d = j.at("dendrogram");
            m.dendrogram.leaf_count = d.at("leaf_count").get<std::size_t>();
            for (const auto& mg : d.at("merges"))
                m.dendrogram.merges.push_back({mg.at("left").get<std::size_t>(), mg.at("right").get<std::size_t>(),
                                               mg.at("height").get<double>(), mg.at("size").get<std::size_t>()});
        }
        return m;
    } catch (const nlohmann::json::exception& ex) {
        throw ModelError(std::string("cluster model json: ") + ex.what());
    }
}

}  // namespace hbnet::cluster
