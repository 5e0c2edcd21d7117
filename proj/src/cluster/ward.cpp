#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "hbnet/cluster.hpp"
#include "hbnet/error.hpp"
#include "silhouette_detail.hpp"

namespace hbnet::cluster {

namespace {

struct PairKey {
    std::size_t lo;
    std::size_t hi;
    auto operator<=>(const PairKey&) const = default;
};

}  // namespace

Dendrogram ward_linkage(const Eigen::MatrixXd& points) {
    const auto G = static_cast<std::size_t>(points.rows());
    if (G < 2) throw DataError("ward_linkage: need at least 2 points");
    if (!points.allFinite()) throw DataError("ward_linkage: non-finite coordinates");

    // Squared Euclidean distances, updated in place by Lance-Williams.
    std::vector<double> D(G * G, 0.0);
    auto d = [&](std::size_t i, std::size_t j) -> double& { return D[i * G + j]; };
    for (std::size_t i = 0; i < G; ++i)
        for (std::size_t j = i + 1; j < G; ++j) {
            const double v = (points.row(static_cast<Eigen::Index>(i)) - points.row(static_cast<Eigen::Index>(j))).squaredNorm();
            d(i, j) = v;
            d(j, i) = v;
        }

    std::vector<char> active(G, 1);
    std::vector<std::size_t> size(G, 1), min_leaf(G), node(G);
    std::iota(min_leaf.begin(), min_leaf.end(), 0);
    std::iota(node.begin(), node.end(), 0);

    auto key = [&](std::size_t i, std::size_t j) {
        return PairKey{std::min(min_leaf[i], min_leaf[j]), std::max(min_leaf[i], min_leaf[j])};
    };
    auto better = [&](double d1, PairKey k1, double d2, PairKey k2) {
        return d1 < d2 || (d1 == d2 && k1 < k2);
    };

    // Cached nearest neighbour of every active slot, over all other slots.
    std::vector<std::size_t> nn(G, 0);
    std::vector<double> nn_d(G, std::numeric_limits<double>::infinity());
    auto refresh = [&](std::size_t i) {
        nn_d[i] = std::numeric_limits<double>::infinity();
        bool found = false;
        for (std::size_t j = 0; j < G; ++j) {
            if (j == i || !active[j]) continue;
            if (!found || better(d(i, j), key(i, j), nn_d[i], key(i, nn[i]))) {
                nn[i] = j;
                nn_d[i] = d(i, j);
                found = true;
            }
        }
    };
    for (std::size_t i = 0; i < G; ++i) refresh(i);

    Dendrogram out;
    out.leaf_count = G;
    out.merges.reserve(G - 1);
    for (std::size_t step = 0; step + 1 < G; ++step) {
        std::size_t a = G;
        for (std::size_t i = 0; i < G; ++i) {
            if (!active[i]) continue;
            if (a == G || better(nn_d[i], key(i, nn[i]), nn_d[a], key(a, nn[a]))) a = i;
        }
        std::size_t b = nn[a];
        const double cost = nn_d[a];

        out.merges.push_back({std::min(node[a], node[b]), std::max(node[a], node[b]),
                              std::sqrt(std::max(cost, 0.0)), size[a] + size[b]});

        const auto na = static_cast<double>(size[a]);
        const auto nb = static_cast<double>(size[b]);
        for (std::size_t k = 0; k < G; ++k) {
            if (!active[k] || k == a || k == b) continue;
            const auto nk = static_cast<double>(size[k]);
            const double v = ((na + nk) * d(k, a) + (nb + nk) * d(k, b) - nk * cost) / (na + nb + nk);
            d(k, a) = v;
            d(a, k) = v;
        }
        size[a] += size[b];
        min_leaf[a] = std::min(min_leaf[a], min_leaf[b]);
        node[a] = G + step;
        active[b] = 0;

        for (std::size_t k = 0; k < G; ++k) {
            if (!active[k] || k == a) continue;
            if (nn[k] == a || nn[k] == b)
                refresh(k);
            else if (better(d(k, a), key(k, a), nn_d[k], key(k, nn[k]))) {
                nn[k] = a;
                nn_d[k] = d(k, a);
            }
        }
        refresh(a);
    }
    return out;
}

nlohmann::json Dendrogram::to_json() const {
    nlohmann::json merges_json = nlohmann::json::array();
    for (const auto& m : merges)
        merges_json.push_back({{"left", m.left}, {"right", m.right}, {"height", m.height}, {"size", m.size}});
    return {{"leaf_count", leaf_count}, {"merges", merges_json}};
}

std::vector<int> cut_tree(const Dendrogram& d, std::size_t k) {
    const std::size_t G = d.leaf_count;
    if (k < 1 || k > G) throw DataError("cut_tree: k must lie in [1, " + std::to_string(G) + "]");
    if (d.merges.size() + 1 != G) throw DataError("cut_tree: malformed dendrogram");

    std::vector<std::size_t> parent(G);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    // Representative leaf of every node id.
    std::vector<std::size_t> rep(2 * G - 1);
    std::iota(rep.begin(), rep.begin() + static_cast<std::ptrdiff_t>(G), 0);
    for (std::size_t s = 0; s < G - k; ++s) {
        const auto& m = d.merges[s];
        if (m.left >= G + s || m.right >= G + s) throw DataError("cut_tree: merge refers to a later node");
        const std::size_t ra = find(rep[m.left]), rb = find(rep[m.right]);
        parent[std::max(ra, rb)] = std::min(ra, rb);
        rep[G + s] = std::min(ra, rb);
    }

    std::vector<int> labels(G, 0);
    std::map<std::size_t, int> root_label;
    for (std::size_t i = 0; i < G; ++i) {
        auto [it, fresh] = root_label.emplace(find(i), static_cast<int>(root_label.size()) + 1);
        labels[i] = it->second;
    }
    return labels;
}

namespace detail {

Eigen::MatrixXd pairwise_distances(const Eigen::MatrixXd& points) {
    const auto n = points.rows();
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) D(i, j) = D(j, i) = (points.row(i) - points.row(j)).norm();
    return D;
}

double silhouette_from_distances(const Eigen::MatrixXd& D, std::span<const int> labels) {
    const auto n = static_cast<std::size_t>(D.rows());
    if (labels.size() != n) throw DataError("silhouette: label count does not match points");
    std::map<int, std::size_t> index;
    for (int l : labels) index.emplace(l, 0);
    if (index.size() < 2) throw DataError("silhouette: need at least 2 clusters");
    std::size_t next = 0;
    for (auto& [l, idx] : index) idx = next++;

    std::vector<std::size_t> code(n), count(index.size(), 0);
    for (std::size_t i = 0; i < n; ++i) {
        code[i] = index[labels[i]];
        ++count[code[i]];
    }
    double total = 0.0;
    std::vector<double> sum(index.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (count[code[i]] == 1) continue;
        std::fill(sum.begin(), sum.end(), 0.0);
        for (std::size_t j = 0; j < n; ++j) sum[code[j]] += D(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        const double a = sum[code[i]] / static_cast<double>(count[code[i]] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < sum.size(); ++c)
            if (c != code[i]) b = std::min(b, sum[c] / static_cast<double>(count[c]));
        const double m = std::max(a, b);
        if (m > 0.0) total += (b - a) / m;
    }
    return total / static_cast<double>(n);
}

}  // namespace detail

double silhouette(const Eigen::MatrixXd& points, std::span<const int> labels) {
    return detail::silhouette_from_distances(detail::pairwise_distances(points), labels);
}

}  // namespace hbnet::cluster
