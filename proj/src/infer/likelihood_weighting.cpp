#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "hbnet/csv.hpp"
#include "hbnet/error.hpp"
#include "hbnet/infer.hpp"
#include "hbnet/parallel.hpp"
#include "hbnet/rng.hpp"

namespace hbnet::infer {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;

struct Plan {
    std::vector<std::size_t> order;     ///< relevant nodes, topological
    std::vector<char> observed;         ///< by node index
    std::vector<double> value;          ///< evidence value (level code for the root)
    std::vector<std::vector<int>> level_map;  ///< per node: root code -> model level index
    std::optional<std::size_t> root;
};

std::string label_of(const EvidenceValue& v) {
    if (const auto* s = std::get_if<std::string>(&v)) return *s;
    return csv::format_double(std::get<double>(v));
}

Plan make_plan(const FittedNetwork& net, const Evidence& evidence, const std::string& query) {
    const auto& g = net.dag;
    const std::size_t n = g.size();
    Plan plan;
    plan.observed.assign(n, 0);
    plan.value.assign(n, 0.0);
    plan.level_map.resize(n);
    if (auto r = net.cluster_node()) plan.root = g.at(*r);

    const std::size_t q = g.at(query);
    for (const auto& [name, v] : evidence) {
        const std::size_t i = g.at(name);
        if (i == q) throw ModelError("query node " + query + " is also in the evidence");
        plan.observed[i] = 1;
        if (plan.root && i == *plan.root) {
            plan.value[i] = level_index(net.nodes[i], label_of(v));
        } else {
            const auto* x = std::get_if<double>(&v);
            if (!x) throw ModelError("evidence for continuous node " + name + " must be numeric");
            if (!std::isfinite(*x)) throw ModelError("evidence for " + name + " is not finite");
            plan.value[i] = *x;
        }
    }

    // Only ancestors of the query and evidence nodes affect the result.
    std::vector<char> relevant(n, 0);
    std::vector<std::size_t> stack{q};
    for (std::size_t i = 0; i < n; ++i)
        if (plan.observed[i]) stack.push_back(i);
    while (!stack.empty()) {
        const std::size_t u = stack.back();
        stack.pop_back();
        if (relevant[u]) continue;
        relevant[u] = 1;
        for (auto p : g.parent_indices(u)) stack.push_back(p);
    }
    for (auto i : graph::topological_indices(g))
        if (relevant[i]) plan.order.push_back(i);

    if (plan.root) {
        const auto* mn = std::get_if<models::Multinomial>(&net.nodes[*plan.root].model);
        if (!mn) throw ModelError("cluster node must hold a multinomial model");
        for (std::size_t i = 0; i < n; ++i) {
            const auto& m = net.nodes[i];
            if (!m.grouping) continue;
            for (const auto& l : mn->levels) plan.level_map[i].push_back(level_index(m, l));
        }
    }
    return plan;
}

/// Runs one particle; returns its log weight and fills `vals`.
double run_particle(const FittedNetwork& net, const Plan& plan, std::uint64_t seed, std::size_t particle,
                    std::vector<double>& vals) {
    CounterRng rng(seed, particle);
    double lw = 0.0;
    for (auto i : plan.order) {
        const NodeModel& m = net.nodes[i];
        if (const auto* mn = std::get_if<models::Multinomial>(&m.model)) {
            if (plan.observed[i]) {
                vals[i] = plan.value[i];
                const int code = static_cast<int>(plan.value[i]);
                if (code >= 0) lw += std::log(mn->probs[static_cast<std::size_t>(code)]);
            } else {
                vals[i] = static_cast<double>(categorical(rng, std::span<const double>(mn->probs)));
            }
            continue;
        }
        const auto x = design_values(net, m, vals);
        std::optional<int> cluster;
        if (m.grouping) {
            const int code = static_cast<int>(vals[net.dag.at(*m.grouping)]);
            const auto& map = plan.level_map[i];
            cluster = code >= 0 && static_cast<std::size_t>(code) < map.size() ? map[static_cast<std::size_t>(code)] : -1;
        }
        const auto pr = models::predict_row(m.model, x, cluster);
        if (plan.observed[i]) {
            vals[i] = plan.value[i];
            const double z = (vals[i] - pr.mean) / pr.sd;
            lw += -0.5 * z * z - std::log(pr.sd) - kLogSqrt2Pi;
        } else {
            vals[i] = pr.mean + pr.sd * rng.normal();
        }
    }
    return lw;
}

}  // namespace

double WeightedSample::mean() const {
    double sw = 0.0, swx = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        sw += weights[i];
        swx += weights[i] * values[i];
    }
    return swx / sw;
}

WeightedSample likelihood_weighting(const FittedNetwork& net, const Evidence& evidence, const std::string& query,
                                    std::size_t n_particles, std::uint64_t seed, std::size_t threads) {
    if (n_particles < 1) throw ModelError("likelihood weighting needs at least one particle");
    const Plan plan = make_plan(net, evidence, query);
    const std::size_t q = net.dag.at(query);
    if (plan.root && q == *plan.root) throw ModelError("query must be a continuous node");

    WeightedSample s;
    s.values.resize(n_particles);
    std::vector<double> lw(n_particles);
    const std::size_t workers = std::clamp<std::size_t>(threads, 1, n_particles);
    const std::size_t chunk = (n_particles + workers - 1) / workers;
    parallel_for(workers, static_cast<unsigned>(workers), [&](std::size_t w) {
        std::vector<double> vals(net.dag.size(), 0.0);
        for (std::size_t i = w * chunk; i < std::min(n_particles, (w + 1) * chunk); ++i) {
            lw[i] = run_particle(net, plan, seed, i, vals);
            s.values[i] = vals[q];
        }
    });

    const double top = *std::max_element(lw.begin(), lw.end());
    if (!(top > -std::numeric_limits<double>::infinity()))
        throw ZeroWeightError("every particle has zero weight; use more particles or relax the evidence");
    s.weights.resize(n_particles);
    double sw = 0.0, sw2 = 0.0;
    for (std::size_t i = 0; i < n_particles; ++i) {
        s.weights[i] = std::exp(lw[i] - top);
        sw += s.weights[i];
        sw2 += s.weights[i] * s.weights[i];
    }
    s.ess = sw * sw / sw2;
    return s;
}

double weighted_quantile(std::span<const double> values, std::span<const double> weights, double p) {
    if (values.size() != weights.size()) throw ModelError("weighted_quantile: length mismatch");
    if (!(p >= 0.0 && p <= 1.0)) throw ModelError("weighted_quantile: p must lie in [0, 1]");
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < values.size(); ++i)
        if (weights[i] > 0.0) idx.push_back(i);
    if (idx.empty()) throw ZeroWeightError("weighted_quantile: no positive weights");
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    if (idx.size() == 1) return values[idx[0]];

    double total = 0.0;
    for (auto i : idx) total += weights[i];
    std::vector<double> pos(idx.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < idx.size(); ++k) {
        pos[k] = acc + 0.5 * weights[idx[k]] / total;
        acc += weights[idx[k]] / total;
    }
    const double first = pos.front(), span = pos.back() - pos.front();
    for (auto& x : pos) x = (x - first) / span;
    auto it = std::lower_bound(pos.begin(), pos.end(), p);
    if (it == pos.begin()) return values[idx.front()];
    if (it == pos.end()) return values[idx.back()];
    const auto k = static_cast<std::size_t>(it - pos.begin());
    const double t = (p - pos[k - 1]) / (pos[k] - pos[k - 1]);
    return values[idx[k - 1]] + t * (values[idx[k]] - values[idx[k - 1]]);
}

Prediction summarize(const WeightedSample& s) {
    return {s.mean(), weighted_quantile(s.values, s.weights, 0.1), weighted_quantile(s.values, s.weights, 0.5),
            weighted_quantile(s.values, s.weights, 0.9), s.ess};
}

Prediction predict(const FittedNetwork& net, const Evidence& evidence, const std::string& query,
                   std::size_t n_particles, std::uint64_t seed, std::size_t threads) {
    return summarize(likelihood_weighting(net, evidence, query, n_particles, seed, threads));
}

Evidence row_evidence(const FittedNetwork& net, const data::Dataset& ds, std::size_t row, const std::string& exclude,
                      ClusterEvidence mode) {
    Evidence ev;
    const auto root = net.cluster_node();
    for (const auto& v : net.dag.nodes()) {
        if (v == exclude) continue;
        if (root && v == *root) {
            if (mode == ClusterEvidence::observed && ds.has_column(v)) ev[v] = ds.column(v).label(row);
            continue;
        }
        ev[v] = ds.continuous(v)[row];
    }
    return ev;
}

std::vector<double> impute(const FittedNetwork& net, const data::Dataset& ds, const std::string& target,
                           std::size_t n_particles, std::uint64_t seed, ClusterEvidence mode, std::size_t threads) {
    std::vector<double> out(ds.n_rows(), 0.0);
    std::vector<std::size_t> failed;
    for (std::size_t r = 0; r < ds.n_rows(); ++r) {
        const Evidence ev = row_evidence(net, ds, r, target, mode);
        std::string content;
        for (const auto& [k, v] : ev) content += k + "=" + label_of(v) + ";";
        try {
            out[r] = likelihood_weighting(net, ev, target, n_particles, derive_seed(seed, stable_hash(content)), threads)
                         .mean();
        } catch (const ZeroWeightError&) {
            failed.push_back(r);
        }
    }
    if (!failed.empty()) {
        std::string msg = "impute: zero total weight in rows";
        for (auto r : failed) msg += " " + std::to_string(r);
        throw ZeroWeightError(msg, failed);
    }
    return out;
}

CascadeResult predict_cascade(const FittedNetwork& net, const Evidence& evidence, const std::string& target,
                              const std::vector<std::string>& stage1_nodes, std::size_t n_particles,
                              std::uint64_t seed, std::size_t threads) {
    if (evidence.count(target)) throw ModelError("cascade: the target cannot be evidence");
    CascadeResult res;
    Evidence available = evidence;
    std::vector<char> wanted(net.dag.size(), 0);
    for (const auto& v : stage1_nodes) {
        if (v == target) throw ModelError("cascade: the target cannot be a stage-1 node");
        wanted[net.dag.at(v)] = 1;
    }
    for (auto i : graph::topological_indices(net.dag)) {
        if (!wanted[i]) continue;
        const std::string& v = net.dag.nodes()[i];
        if (available.count(v)) continue;
        Evidence local;
        for (const auto& b : graph::markov_blanket(net.dag, v))
            if (auto it = available.find(b); it != available.end()) local.insert(*it);
        const double mean = likelihood_weighting(net, local, v, n_particles, derive_seed(seed, i + 1), threads).mean();
        res.stage1[v] = mean;
        available[v] = mean;
    }
    res.target = predict(net, available, target, n_particles, derive_seed(seed, 0), threads);
    return res;
}

}  // namespace hbnet::infer
