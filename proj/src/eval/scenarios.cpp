#include <array>

#include "hbnet/error.hpp"
#include "hbnet/eval.hpp"
#include "hbnet/rng.hpp"

namespace hbnet::eval {

namespace {

// One mark per column of scenario_columns().
constexpr std::array<const char*, 32> kScenarioMarks = {
    "x.................",  // 1
    "xx................",  // 2
    "xx.x..............",  // 3
    "xx.xx.............",  // 4
    "xx.xxx............",  // 5
    "xxxxxx............",  // 6
    "......x...........",  // 7
    "......xx..........",  // 8
    "......xx.x........",  // 9
    "......xx.xx.......",  // 10
    "......xx.xxx......",  // 11
    "......xxxxxx......",  // 12
    "x.....x...........",  // 13
    "xx....xx..........",  // 14
    "xx.x..xx.x........",  // 15
    "xx.xx.xx.xx.......",  // 16
    "xx.xxxxx.xxx......",  // 17
    "xxxxxxxxxxxx......",  // 18
    "............x.....",  // 19
    "............xx....",  // 20
    "............xxx...",  // 21
    "............xxxx..",  // 22
    "............xxxxx.",  // 23
    "............xxxxxx",  // 24
    "x.....x.....x.....",  // 25
    "xx....xx....xx....",  // 26
    "xx.x..xx.x..xxx...",  // 27
    "xx.xx.xx.xx.xxxx..",  // 28
    "xx.xxxxx.xxxxxxxx.",  // 29
    "xxxxxxxxxxxxxxxxxx",  // 30
    "xx.xxxxxxxxxxxx...",  // 31
    "xx.xxxxxxx..x.x...",  // 32
};

}  // namespace

const std::vector<std::string>& scenario_columns() {
    static const std::vector<std::string> cols = {"T1",  "T2",  "T3",  "T4",  "T5", "T6", "RH1", "RH2", "RH3",
                                                  "RH4", "RH5", "RH6", "Si", "GW", "TH", "PH",  "An",  "EH"};
    return cols;
}

std::vector<Scenario> builtin_scenarios() {
    const auto& cols = scenario_columns();
    std::vector<Scenario> out;
    for (std::size_t s = 0; s < kScenarioMarks.size(); ++s) {
        Scenario sc{static_cast<int>(s) + 1, {}};
        for (std::size_t c = 0; c < cols.size(); ++c)
            if (kScenarioMarks[s][c] == 'x') sc.evidence_nodes.push_back(cols[c]);
        out.push_back(std::move(sc));
    }
    return out;
}

std::vector<Scenario> scenarios_from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw DataError("scenarios: expected an array");
    std::vector<Scenario> out;
    try {
        for (const auto& e : j) {
            Scenario s{e.at("id").get<int>(), e.at("evidence").get<std::vector<std::string>>()};
            if (s.evidence_nodes.empty()) throw DataError("scenario " + std::to_string(s.id) + " has no evidence");
            out.push_back(std::move(s));
        }
    } catch (const nlohmann::json::exception& ex) {
        throw DataError(std::string("scenarios: ") + ex.what());
    }
    return out;
}

std::vector<ScenarioResult> run_scenarios(const FittedNetwork& net, const data::Dataset& test,
                                          const std::vector<Scenario>& scenarios, const std::string& target,
                                          std::size_t n_particles, std::uint64_t seed, infer::ClusterEvidence mode,
                                          std::size_t threads) {
    if (test.n_rows() == 0) throw DataError("run_scenarios: empty test set");
    const auto root = net.cluster_node();
    const auto actual = test.continuous(target);
    std::vector<ScenarioResult> out;
    for (const auto& sc : scenarios) {
        for (const auto& v : sc.evidence_nodes) {
            if (v == target) throw DataError("scenario " + std::to_string(sc.id) + " uses the target as evidence");
            if (!test.has_column(v) || !net.dag.index_of(v))
                throw DataError("scenario " + std::to_string(sc.id) + ": missing evidence column " + v);
        }
        std::vector<double> pred(test.n_rows());
        for (std::size_t r = 0; r < test.n_rows(); ++r) {
            infer::Evidence ev;
            for (const auto& v : sc.evidence_nodes) {
                if (root && v == *root)
                    ev[v] = test.column(v).label(r);
                else
                    ev[v] = test.continuous(v)[r];
            }
            if (root && mode == infer::ClusterEvidence::observed && test.has_column(*root))
                ev[*root] = test.column(*root).label(r);
            pred[r] = infer::likelihood_weighting(net, ev, target, n_particles,
                                                  derive_seed(seed, static_cast<std::uint64_t>(sc.id) * 1000003u + r),
                                                  threads)
                          .mean();
        }
        out.push_back({sc.id, sc.evidence_nodes, mape(actual, pred), test.n_rows()});
    }
    return out;
}

}  // namespace hbnet::eval
