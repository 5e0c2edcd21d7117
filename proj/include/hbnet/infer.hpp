#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "hbnet/data.hpp"
#include "hbnet/network.hpp"

namespace hbnet::infer {

/// Continuous nodes take a real value, the cluster node a level label.
using EvidenceValue = std::variant<double, std::string>;
using Evidence = std::map<std::string, EvidenceValue>;

struct WeightedSample {
    std::vector<double> values;
    std::vector<double> weights;  ///< normalised so the largest weight is 1
    double ess = 0.0;

    double mean() const;
};

/// Likelihood weighting by ancestral sampling. Particle i draws from its own
/// counter-based stream (seed, i), so the result does not depend on
/// `threads`. A cluster label the model has not seen selects zero random
/// effects and contributes no mass factor.
WeightedSample likelihood_weighting(const FittedNetwork& net, const Evidence& evidence, const std::string& query,
                                    std::size_t n_particles, std::uint64_t seed, std::size_t threads = 1);

/// Weighted quantile with linear interpolation between sorted values placed
/// at their mid-cumulative weight, rescaled to span [0, 1]. Equal weights
/// give the usual type-7 quantile.
double weighted_quantile(std::span<const double> values, std::span<const double> weights, double p);

struct Prediction {
    double mean = 0.0;
    double q10 = 0.0;
    double q50 = 0.0;
    double q90 = 0.0;
    double ess = 0.0;
};

Prediction summarize(const WeightedSample& s);

Prediction predict(const FittedNetwork& net, const Evidence& evidence, const std::string& query,
                   std::size_t n_particles, std::uint64_t seed, std::size_t threads = 1);

enum class ClusterEvidence { observed, marginal };

/// Evidence made of the network nodes of row `row`, except `exclude`.
/// The cluster node is included only in `observed` mode.
Evidence row_evidence(const FittedNetwork& net, const data::Dataset& ds, std::size_t row, const std::string& exclude,
                      ClusterEvidence mode = ClusterEvidence::observed);

/// Weighted-mean imputation of `target` for every row, given all other
/// network nodes of that row. Each row's seed depends on the seed and the
/// row's evidence values only, so permuting rows permutes the output.
std::vector<double> impute(const FittedNetwork& net, const data::Dataset& ds, const std::string& target,
                           std::size_t n_particles, std::uint64_t seed,
                           ClusterEvidence mode = ClusterEvidence::observed, std::size_t threads = 1);

struct CascadeResult {
    Prediction target;
    std::map<std::string, double> stage1;  ///< point predictions of intermediate nodes
};

/// Two-stage prediction: each node of `stage1_nodes` missing from the
/// evidence is predicted in topological order from the available values
/// inside its Markov blanket; the target is then predicted from the
/// evidence plus those point predictions.
CascadeResult predict_cascade(const FittedNetwork& net, const Evidence& evidence, const std::string& target,
                              const std::vector<std::string>& stage1_nodes, std::size_t n_particles,
                              std::uint64_t seed, std::size_t threads = 1);

struct KdeResult {
    double lo = 0.0;
    double hi = 0.0;
    double bandwidth = 0.0;
    std::vector<double> grid;     ///< 512 points over [min - 3h, max + 3h]; empty if h = 0
    std::vector<double> density;
};

/// Weighted Gaussian KDE (Silverman's rule with n = ESS) and the
/// equal-tailed weighted-quantile interval of the given coverage.
KdeResult kde_interval(const WeightedSample& sample, double coverage);

}  // namespace hbnet::infer
