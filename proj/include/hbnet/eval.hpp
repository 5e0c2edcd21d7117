#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hbnet/cluster.hpp"
#include "hbnet/data.hpp"
#include "hbnet/graph.hpp"
#include "hbnet/infer.hpp"
#include "hbnet/network.hpp"
#include "hbnet/search.hpp"

namespace hbnet::eval {

/// Mean of |a - p| / |a|; throws if any |a| < 1e-8.
double mape(std::span<const double> actual, std::span<const double> predicted);

/// Pearson correlation; throws on zero variance.
double pearson(std::span<const double> a, std::span<const double> b);

enum class Loss { absolute, squared };

struct DmResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

/// Diebold-Mariano test on d = L(a) - L(b) with the lag-0 variance and a
/// two-sided normal p-value. Needs n >= 10 and non-zero variance of d.
DmResult dm_test(std::span<const double> errors_a, std::span<const double> errors_b, Loss loss);

struct Scenario {
    int id = 0;
    std::vector<std::string> evidence_nodes;
};

/// Node names of the built-in table, in column order.
const std::vector<std::string>& scenario_columns();
/// The 32 built-in yield prediction scenarios.
std::vector<Scenario> builtin_scenarios();
/// [{"id": 1, "evidence": ["T1", ...]}, ...]
std::vector<Scenario> scenarios_from_json(const nlohmann::json& j);

struct ScenarioResult {
    int id = 0;
    std::vector<std::string> evidence_nodes;
    double mape = 0.0;
    std::size_t n = 0;
};

/// Predicts `target` for every test row from each scenario's evidence
/// columns (plus the cluster label in observed mode).
std::vector<ScenarioResult> run_scenarios(const FittedNetwork& net, const data::Dataset& test,
                                          const std::vector<Scenario>& scenarios, const std::string& target,
                                          std::size_t n_particles, std::uint64_t seed,
                                          infer::ClusterEvidence mode = infer::ClusterEvidence::observed,
                                          std::size_t threads = 1);

struct CvConfig {
    std::size_t reps = 50;
    double fraction = 0.2;
    std::size_t particles = 2000;
    std::uint64_t seed = 1;
    std::size_t threads = 1;
    cluster::ClusterOptions clustering;
    search::HillClimbConfig search;
    infer::ClusterEvidence cluster_evidence = infer::ClusterEvidence::observed;
    /// Scenarios scored on the test set of every replicate (may be empty).
    std::vector<Scenario> scenarios;
};

struct CvReport {
    std::size_t replicate = 0;
    double mape = 0.0;
    double correlation = 0.0;
    std::map<int, double> per_scenario;
    std::size_t n_test = 0;
    std::size_t k = 0;
    double train_score = 0.0;
    std::vector<graph::Arc> arcs;
    std::vector<double> observed;
    std::vector<double> predicted;
};

/// Group-atomic hold-out replicates of the whole pipeline. In each one the
/// clusters, the structure and the parameters are learned from the training
/// groups only; test groups get the nearest training centroid. The target
/// is predicted by the cascade from the weather nodes (and the cluster in
/// observed mode). The cluster node is named after the root in `roles`.
std::vector<CvReport> cross_validate(const data::Dataset& ds, const std::vector<NodeRole>& roles,
                                     const graph::ConstraintSet& constraints, const CvConfig& config);

}  // namespace hbnet::eval
