#include <algorithm>

#include "hbnet/error.hpp"
#include "hbnet/eval.hpp"
#include "hbnet/logging.hpp"
#include "hbnet/parallel.hpp"
#include "hbnet/rng.hpp"

namespace hbnet::eval {

namespace {

std::vector<std::string> nodes_with_role(const data::Schema& schema, const std::vector<NodeRole>& roles,
                                         data::ColumnRole role) {
    std::vector<std::string> out;
    for (const auto& name : schema.names_with_role(role))
        if (std::any_of(roles.begin(), roles.end(), [&](const NodeRole& r) { return r.node == name; }))
            out.push_back(name);
    return out;
}

CvReport run_replicate(const data::Dataset& base, const std::vector<NodeRole>& roles,
                       const graph::ConstraintSet& constraints, const CvConfig& config, const std::string& root,
                       std::size_t rep) {
    const std::uint64_t seed = derive_seed(config.seed, rep);
    const auto split = data::holdout_split(base, config.fraction, seed);
    const auto cm = cluster::fit_clusters(split.train, config.clustering);
    const auto train = cluster::add_cluster_column(split.train, cm, root);
    const auto test = cluster::add_cluster_column(split.test, cm, root);

    search::HillClimbConfig hc_config = config.search;
    hc_config.threads = 1;
    const auto hc = search::hill_climb(train, roles, constraints, hc_config);
    const FittedNetwork& net = hc.network;

    const std::string target = base.schema().target().name;
    const auto stage1 = nodes_with_role(base.schema(), roles, data::ColumnRole::phenological);
    const auto weather = nodes_with_role(base.schema(), roles, data::ColumnRole::weather);

    CvReport rep_out;
    rep_out.replicate = rep;
    rep_out.n_test = test.n_rows();
    rep_out.k = cm.k;
    rep_out.train_score = net.score();
    rep_out.arcs = net.dag.arcs();
    const auto actual = test.continuous(target);
    rep_out.observed.assign(actual.begin(), actual.end());
    rep_out.predicted.resize(test.n_rows());
    for (std::size_t r = 0; r < test.n_rows(); ++r) {
        infer::Evidence ev;
        for (const auto& w : weather) ev[w] = test.continuous(w)[r];
        if (config.cluster_evidence == infer::ClusterEvidence::observed) ev[root] = test.column(root).label(r);
        rep_out.predicted[r] =
            infer::predict_cascade(net, ev, target, stage1, config.particles, derive_seed(seed, r + 1)).target.mean;
    }
    rep_out.mape = mape(rep_out.observed, rep_out.predicted);
    try {
        rep_out.correlation = pearson(rep_out.observed, rep_out.predicted);
    } catch (const ModelError&) {
        log::warn("replicate " + std::to_string(rep) + ": constant predictions, correlation set to 0");
        rep_out.correlation = 0.0;
    }
    if (!config.scenarios.empty())
        for (const auto& s : run_scenarios(net, test, config.scenarios, target, config.particles, seed,
                                           config.cluster_evidence))
            rep_out.per_scenario[s.id] = s.mape;
    return rep_out;
}

}  // namespace

std::vector<CvReport> cross_validate(const data::Dataset& ds, const std::vector<NodeRole>& roles,
                                     const graph::ConstraintSet& constraints, const CvConfig& config) {
    validate_roles(roles);
    if (config.reps < 1) throw DataError("cross_validate: reps must be >= 1");
    std::string root;
    for (const auto& r : roles)
        if (r.family == Family::multinomial_root) root = r.node;
    data::Dataset base = ds;
    if (auto c = ds.schema().cluster_column()) base = base.without_column(*c);
    if (base.has_column(root)) throw DataError("cross_validate: column " + root + " clashes with the cluster node");

    std::vector<CvReport> out(config.reps);
    parallel_for(config.reps, static_cast<unsigned>(config.threads), [&](std::size_t rep) {
        out[rep] = run_replicate(base, roles, constraints, config, root, rep);
        log::info("replicate " + std::to_string(rep) + ": mape " + std::to_string(out[rep].mape) + ", correlation " +
                  std::to_string(out[rep].correlation));
    });
    return out;
}

}  // namespace hbnet::eval
