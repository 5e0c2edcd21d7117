#include <algorithm>
#include <limits>
#include <set>

#include "hbnet/error.hpp"
#include "hbnet/logging.hpp"
#include "hbnet/parallel.hpp"
#include "hbnet/search.hpp"

namespace hbnet::search {

namespace {

constexpr double kTieTolerance = 1e-9;
constexpr double kMinGain = 1e-10;

struct Candidate {
    graph::Move move;
    graph::Dag dag;
    std::vector<std::pair<std::string, std::vector<std::string>>> rescored;
    double delta = 0.0;
};

bool tie_less(const graph::Move& a, const graph::Move& b) {
    return std::tie(a.type, a.parent, a.child) < std::tie(b.type, b.parent, b.child);
}

std::vector<std::string> sorted_parents(const graph::Dag& g, std::size_t v) {
    std::vector<std::string> out;
    for (auto p : g.parent_indices(v)) out.push_back(g.nodes()[p]);
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

HillClimbResult hill_climb(const data::Dataset& ds, const std::vector<NodeRole>& roles,
                           const graph::ConstraintSet& constraints, const HillClimbConfig& config, ScoreCache* cache) {
    validate_roles(roles);
    std::vector<std::string> nodes;
    for (const auto& r : roles) {
        if (!ds.has_column(r.node)) throw DataError("dataset has no column for node " + r.node);
        nodes.push_back(r.node);
    }
    const graph::ConstraintSet c = role_constraints(roles, constraints);
    c.validate(nodes);
    std::string root;
    for (const auto& r : roles)
        if (r.family == Family::multinomial_root) root = r.node;

    ScoreCache local;
    ScoreCache& sc = cache ? *cache : local;
    const std::size_t fits_before = sc.fits();

    HillClimbResult res;
    res.initial = graph::Dag(nodes, std::vector<graph::Arc>(c.whitelist.begin(), c.whitelist.end()));
    graph::Dag g = res.initial;
    const std::size_t n = nodes.size();
    const std::size_t root_idx = g.at(root);

    auto node_score = [&](const std::string& v, const std::vector<std::string>& parents) {
        auto hit = sc.find(v, parents);
        if (!hit) throw ModelError("internal: score missing from cache for " + v);
        return hit->score;
    };
    auto ensure = [&](std::vector<std::pair<std::string, std::vector<std::string>>> keys) {
        std::sort(keys.begin(), keys.end());
        keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
        std::erase_if(keys, [&](const auto& k) { return sc.find(k.first, k.second).has_value(); });
        std::vector<std::optional<NodeModel>> fitted(keys.size());
        parallel_for(keys.size(), static_cast<unsigned>(config.threads),
                     [&](std::size_t i) { fitted[i] = fit_node(keys[i].first, keys[i].second, ds, roles); });
        for (auto& m : fitted) sc.insert(std::move(*m));
    };

    {
        std::vector<std::pair<std::string, std::vector<std::string>>> keys;
        for (std::size_t v = 0; v < n; ++v) keys.emplace_back(nodes[v], sorted_parents(g, v));
        ensure(keys);
    }
    std::vector<double> scores(n);
    for (std::size_t v = 0; v < n; ++v) scores[v] = node_score(nodes[v], sorted_parents(g, v));
    double total = 0.0;
    for (double s : scores) total += s;
    res.initial_score = total;

    auto too_many_parents = [&](const graph::Dag& d, std::size_t v) {
        std::size_t k = 0;
        for (auto p : d.parent_indices(v)) k += p != root_idx;
        return k > config.max_parents;
    };

    for (std::size_t iter = 1; iter <= config.max_iter; ++iter) {
        std::vector<Candidate> cands;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (i == j) continue;
                std::vector<graph::MoveType> types;
                if (g.has_arc(i, j))
                    types = {graph::MoveType::remove, graph::MoveType::reverse};
                else if (!g.has_arc(j, i))
                    types = {graph::MoveType::add};
                for (auto t : types) {
                    graph::Move mv{t, nodes[i], nodes[j]};
                    auto out = graph::apply_move(g, mv, c);
                    if (!out.accepted()) continue;
                    Candidate cand{mv, std::move(*out.dag), {}, 0.0};
                    if (too_many_parents(cand.dag, j)) continue;
                    if (t == graph::MoveType::reverse && too_many_parents(cand.dag, i)) continue;
                    cand.rescored.emplace_back(nodes[j], sorted_parents(cand.dag, j));
                    if (t == graph::MoveType::reverse) cand.rescored.emplace_back(nodes[i], sorted_parents(cand.dag, i));
                    cands.push_back(std::move(cand));
                }
            }
        }

        std::vector<std::pair<std::string, std::vector<std::string>>> keys;
        for (const auto& cand : cands) keys.insert(keys.end(), cand.rescored.begin(), cand.rescored.end());
        ensure(std::move(keys));

        double best_delta = -std::numeric_limits<double>::infinity();
        for (auto& cand : cands) {
            cand.delta = 0.0;
            for (const auto& [v, parents] : cand.rescored)
                cand.delta += node_score(v, parents) - scores[g.at(v)];
            best_delta = std::max(best_delta, cand.delta);
        }
        const Candidate* pick = nullptr;
        for (const auto& cand : cands) {
            if (cand.delta <= kMinGain || cand.delta < best_delta - kTieTolerance) continue;
            if (!pick || tie_less(cand.move, pick->move)) pick = &cand;
        }
        if (!pick) break;

        g = pick->dag;
        for (const auto& [v, parents] : pick->rescored) scores[g.at(v)] = node_score(v, parents);
        total = 0.0;
        for (double s : scores) total += s;
        res.trace.push_back({iter, pick->move, pick->delta, total});
        log::debug("iteration " + std::to_string(iter) + ": " + std::string(graph::to_string(pick->move.type)) + " " +
                   pick->move.parent + " -> " + pick->move.child);
    }

    res.network = fit_network(g, ds, roles, &sc);
    res.fits = sc.fits() - fits_before;
    return res;
}

}  // namespace hbnet::search
