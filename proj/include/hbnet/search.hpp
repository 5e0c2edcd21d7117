#pragma once

#include <atomic>
#include <cstddef>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hbnet/data.hpp"
#include "hbnet/graph.hpp"
#include "hbnet/network.hpp"

namespace hbnet::search {

/// Fits `node` on `parents` according to its role. Continuous parents form
/// the design; the cluster node is the grouping factor for mixed families
/// and an indicator block otherwise. The score is node_bic on n rows.
NodeModel fit_node(const std::string& node, std::vector<std::string> parents, const data::Dataset& ds,
                   const std::vector<NodeRole>& roles);

/// Memo of fitted local models keyed by (node, sorted parent set).
/// Thread-safe; fits() counts insertions of fresh fits.
class ScoreCache {
public:
    using Key = std::pair<std::string, std::vector<std::string>>;

    std::optional<NodeModel> find(const std::string& node, std::vector<std::string> parents) const;
    void insert(NodeModel m);
    std::size_t fits() const noexcept { return fits_.load(); }
    std::size_t size() const;

private:
    mutable std::mutex mutex_;
    std::map<Key, NodeModel> entries_;
    std::atomic<std::size_t> fits_{0};
};

double score_node(const std::string& node, const std::vector<std::string>& parents, const data::Dataset& ds,
                  const std::vector<NodeRole>& roles, ScoreCache& cache);

/// Sum of node scores of `g`, fitting through `cache`.
double network_score(const graph::Dag& g, const data::Dataset& ds, const std::vector<NodeRole>& roles,
                     ScoreCache& cache);

/// User constraints plus those implied by the roles: nothing points into
/// the cluster node, the cluster node never points at a fixed node, and it
/// points at every mixed node.
graph::ConstraintSet role_constraints(const std::vector<NodeRole>& roles, const graph::ConstraintSet& user = {});

struct HillClimbConfig {
    /// Bound on non-cluster parents per node.
    std::size_t max_parents = 8;
    std::size_t max_iter = 100000;
    std::size_t threads = 1;
};

struct TraceEntry {
    std::size_t iteration = 0;
    graph::Move move;
    double delta = 0.0;
    double score = 0.0;  ///< total after the move
};

struct HillClimbResult {
    graph::Dag initial;  ///< whitelist-only start
    double initial_score = 0.0;
    FittedNetwork network;
    std::vector<TraceEntry> trace;
    std::size_t fits = 0;
};

/// Steepest-ascent hill climbing over add/delete/reverse moves. Moves within
/// 1e-9 of the best gain are ordered by (add < delete < reverse, parent,
/// child); a move must improve the score by more than 1e-10.
HillClimbResult hill_climb(const data::Dataset& ds, const std::vector<NodeRole>& roles,
                           const graph::ConstraintSet& constraints, const HillClimbConfig& config = {},
                           ScoreCache* cache = nullptr);

/// Assembles a FittedNetwork for a fixed DAG.
FittedNetwork fit_network(const graph::Dag& g, const data::Dataset& ds, const std::vector<NodeRole>& roles,
                          ScoreCache* cache = nullptr);

struct AuditRow {
    std::string removed;  ///< empty for the full parent set
    double loglik = 0.0;
    int n_params = 0;
    double bic = 0.0;       ///< loglik - k/2 log n, larger is better
    double bic_neg2 = 0.0;  ///< -2 loglik + k log n, smaller is better
};

struct AuditTable {
    std::string node;
    std::vector<std::string> parents;
    std::vector<AuditRow> with_random_effects;
    std::vector<AuditRow> fixed_only;
};

/// Row 0 is the full parent set; each further row drops one non-cluster
/// parent. The fixed-only table refits every row as fixed_gaussian without
/// the cluster node.
AuditTable backward_eliminate(const std::string& node, const std::vector<std::string>& parents,
                              const data::Dataset& ds, const std::vector<NodeRole>& roles);

/// Per-node score breakdown of a fitted network.
struct BicRow {
    std::string node;
    Family family;
    std::vector<std::string> parents;
    double loglik = 0.0;
    int n_params = 0;
    double bic = 0.0;
    double bic_neg2 = 0.0;
};
std::vector<BicRow> bic_table(const FittedNetwork& net);

}  // namespace hbnet::search
