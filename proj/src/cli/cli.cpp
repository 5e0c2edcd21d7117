#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "hbnet/cli.hpp"
#include "hbnet/cluster.hpp"
#include "hbnet/csv.hpp"
#include "hbnet/data.hpp"
#include "hbnet/error.hpp"
#include "hbnet/eval.hpp"
#include "hbnet/infer.hpp"
#include "hbnet/logging.hpp"
#include "hbnet/network.hpp"
#include "hbnet/rng.hpp"
#include "hbnet/search.hpp"
#include "hbnet/synth.hpp"

namespace hbnet::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string fmt(double x) { return csv::format_double(x); }

json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& ex) {
        throw DataError(path + ": " + ex.what());
    }
}

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    return out;
}

void write_text(const fs::path& path, const std::string& text) { open_out(path) << text; }

std::optional<std::size_t> parse_clusters(const std::string& s) {
    if (s == "auto") return std::nullopt;
    auto v = csv::parse_double(s);
    if (!v || *v < 1 || *v != static_cast<double>(static_cast<std::size_t>(*v)))
        throw CLI::ValidationError("--clusters", "expected a positive integer or 'auto'");
    return static_cast<std::size_t>(*v);
}

infer::ClusterEvidence parse_cluster_evidence(const std::string& s) {
    return s == "marginal" ? infer::ClusterEvidence::marginal : infer::ClusterEvidence::observed;
}

struct Loaded {
    data::Schema declared;
    data::Dataset ds;
};

Loaded load(const std::string& data_path, const std::string& schema_path) {
    data::Schema schema = data::load_schema(schema_path);
    auto res = data::load_csv(data_path, schema);
    if (res.dropped) log::warn("dropped " + std::to_string(res.dropped) + " incomplete rows");
    log::info("loaded " + std::to_string(res.dataset.n_rows()) + " rows from " + data_path);
    return {std::move(schema), std::move(res.dataset)};
}

std::string cluster_name(const data::Schema& declared) { return declared.cluster_column().value_or("cluster"); }

using LabelTable = std::map<data::GroupKey, std::string>;

LabelTable read_labels(const std::string& path, const std::vector<std::string>& group_columns,
                       const std::string& cluster) {
    const auto rows = csv::read_file(path);
    if (rows.empty()) throw DataError(path + ": empty labels file");
    std::vector<std::size_t> key_idx;
    std::optional<std::size_t> label_idx;
    for (const auto& g : group_columns) {
        auto it = std::find(rows[0].begin(), rows[0].end(), g);
        if (it == rows[0].end()) throw DataError(path + ": missing group_key column " + g);
        key_idx.push_back(static_cast<std::size_t>(it - rows[0].begin()));
    }
    for (std::size_t c = 0; c < rows[0].size(); ++c)
        if (rows[0][c] == cluster || rows[0][c] == "cluster") label_idx = c;
    if (!label_idx) throw DataError(path + ": missing column " + cluster);
    LabelTable t;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        data::GroupKey key;
        for (auto k : key_idx) key.push_back(rows[r].at(k));
        t[key] = rows[r].at(*label_idx);
    }
    return t;
}

data::Dataset apply_labels(const data::Dataset& ds, const LabelTable& labels, const std::string& cluster) {
    std::vector<std::string> per_row(ds.n_rows());
    for (std::size_t r = 0; r < ds.n_rows(); ++r) {
        auto it = labels.find(ds.group_key(r));
        if (it == labels.end()) throw DataError("no cluster label for a group of row " + std::to_string(r));
        per_row[r] = it->second;
    }
    return ds.with_column(data::Column::discrete({cluster, data::ColumnKind::discrete, data::ColumnRole::cluster}, per_row));
}

/// Fitted network plus what is needed to use it on new data.
struct ModelFile {
    data::Schema schema;
    FittedNetwork net;
    std::optional<cluster::ClusterModel> clusters;
    LabelTable labels;

    std::string target() const { return schema.target().name; }
    std::vector<std::string> stage1() const {
        std::vector<std::string> out;
        for (const auto& n : schema.names_with_role(data::ColumnRole::phenological))
            if (net.dag.index_of(n)) out.push_back(n);
        return out;
    }

    json to_json() const {
        json j = {{"format", "hbnet-model"}, {"version", HBNET_VERSION}, {"schema", schema.to_json()},
                  {"network", net.to_json()}};
        if (clusters) j["cluster_model"] = clusters->to_json();
        if (!labels.empty()) {
            j["cluster_labels"] = json::array();
            for (const auto& [k, v] : labels) j["cluster_labels"].push_back({{"key", k}, {"label", v}});
        }
        return j;
    }

    static ModelFile from_json(const json& j) {
        try {
            ModelFile m{data::Schema::from_json(j.at("schema")), FittedNetwork::from_json(j.at("network")), {}, {}};
            if (j.contains("cluster_model")) m.clusters = cluster::ClusterModel::from_json(j.at("cluster_model"));
            if (j.contains("cluster_labels"))
                for (const auto& e : j.at("cluster_labels"))
                    m.labels[e.at("key").get<data::GroupKey>()] = e.at("label").get<std::string>();
            return m;
        } catch (const json::exception& ex) {
            throw ModelError(std::string("model file: ") + ex.what());
        }
    }

    /// Loads data against the model schema, attaching cluster labels when the
    /// file has none. Groups without a label get one the network does not know.
    data::Dataset load_data(const std::string& path) const {
        auto res = data::load_csv(path, schema);
        if (res.dropped) log::warn("dropped " + std::to_string(res.dropped) + " incomplete rows");
        const auto root = net.cluster_node();
        if (!root || res.dataset.has_column(*root)) return std::move(res.dataset);
        if (clusters) return cluster::add_cluster_column(res.dataset, *clusters, *root);
        LabelTable t = labels;
        for (std::size_t r = 0; r < res.dataset.n_rows(); ++r) t.emplace(res.dataset.group_key(r), "unknown");
        return apply_labels(res.dataset, t, *root);
    }
};

struct Common {
    std::uint64_t seed = 1;
    std::size_t threads = 1;
    std::size_t particles = 5000;
};

// ---------------------------------------------------------------- simulate

struct SimulateOpts {
    std::string spec, n_per_cluster, out, schema_out;
};

void cmd_simulate(const SimulateOpts& o, const Common& c) {
    const auto spec = synth::load_spec(o.spec);
    std::vector<std::size_t> sizes;
    std::stringstream ss(o.n_per_cluster);
    for (std::string tok; std::getline(ss, tok, ',');) {
        auto v = csv::parse_double(tok);
        if (!v || *v < 0) throw DataError("--n-per-cluster: bad value " + tok);
        sizes.push_back(static_cast<std::size_t>(*v));
    }
    if (sizes.size() == 1) sizes.assign(spec.n_clusters(), sizes[0]);
    const auto ds = synth::generate(spec, sizes, c.seed);
    auto out = open_out(o.out);
    data::write_csv(out, ds);
    if (!o.schema_out.empty()) write_text(o.schema_out, ds.schema().to_json().dump(2) + "\n");
    log::info("wrote " + std::to_string(ds.n_rows()) + " rows to " + o.out);
}

// ---------------------------------------------------------------- cluster

struct ClusterOpts {
    std::string data, schema, clusters = "auto", out_dir = ".", data_out;
    std::size_t max_k = 100;
    bool no_standardize = false;
};

void cmd_cluster(const ClusterOpts& o, const Common&) {
    auto [declared, ds] = load(o.data, o.schema);
    if (auto c = ds.schema().cluster_column()) ds = ds.without_column(*c);
    const auto cm = cluster::fit_clusters(ds, {parse_clusters(o.clusters), o.max_k, !o.no_standardize});
    const fs::path dir(o.out_dir);
    const std::string name = cluster_name(declared);

    auto labels = open_out(dir / "labels.csv");
    csv::Row header = cm.group_columns;
    header.push_back(name);
    csv::write_row(labels, header);
    for (std::size_t g = 0; g < cm.stats.size(); ++g) {
        csv::Row row = cm.stats[g].group;
        row.push_back(std::to_string(cm.labels[g]));
        csv::write_row(labels, row);
    }
    write_text(dir / "dendrogram.json", cm.dendrogram.to_json().dump(2) + "\n");
    write_text(dir / "cluster_model.json", cm.to_json().dump(2) + "\n");
    auto sil = open_out(dir / "silhouette.csv");
    csv::write_row(sil, {"k", "silhouette"});
    for (auto [k, s] : cm.silhouette_by_k) csv::write_row(sil, {std::to_string(k), fmt(s)});
    if (!o.data_out.empty()) {
        auto out = open_out(o.data_out);
        data::write_csv(out, cluster::add_cluster_column(ds, cm, name));
    }
    log::info("k = " + std::to_string(cm.k) + " clusters over " + std::to_string(cm.stats.size()) + " groups");
}

// ---------------------------------------------------------------- learn

struct LearnOpts {
    std::string data, schema, constraints, clusters_from, clusters = "auto", out, out_dir;
    std::size_t max_parents = 8, max_k = 100;
    bool baseline = false, no_standardize = false;
};

graph::ConstraintSet load_constraints(const std::string& path) {
    if (path.empty()) return {};
    return graph::ConstraintSet::from_json(read_json(path));
}

void write_bic_rows(std::ostream& out, const std::vector<search::AuditRow>& rows, const std::string& node,
                    const std::string& table) {
    for (const auto& r : rows)
        csv::write_row(out, {node, table, r.removed.empty() ? "(none)" : r.removed, fmt(r.loglik),
                             std::to_string(r.n_params), fmt(r.bic), fmt(r.bic_neg2)});
}

void cmd_learn(const LearnOpts& o, const Common& c) {
    auto [declared, ds] = load(o.data, o.schema);
    const std::string name = cluster_name(declared);
    ModelFile mf;
    if (!ds.schema().cluster_column()) {
        if (!o.clusters_from.empty()) {
            mf.labels = read_labels(o.clusters_from, ds.schema().names_with_role(data::ColumnRole::group_key), name);
            ds = apply_labels(ds, mf.labels, name);
        } else {
            mf.clusters = cluster::fit_clusters(ds, {parse_clusters(o.clusters), o.max_k, !o.no_standardize});
            ds = cluster::add_cluster_column(ds, *mf.clusters, name);
            log::info("clustered groups into " + std::to_string(mf.clusters->k) + " clusters");
        }
    }
    auto roles = derive_roles(ds.schema());
    if (o.baseline) roles = baseline_roles(roles);
    search::HillClimbConfig hc{o.max_parents, 100000, c.threads};
    const auto res = search::hill_climb(ds, roles, load_constraints(o.constraints), hc);
    mf.schema = ds.schema();
    mf.net = res.network;

    write_text(o.out, mf.to_json().dump(2) + "\n");
    const fs::path dir = o.out_dir.empty() ? fs::path(o.out).parent_path() : fs::path(o.out_dir);
    write_text(dir / "dag.dot", graph::to_dot(mf.net.dag));
    {
        auto arcs = open_out(dir / "arcs.csv");
        graph::write_arcs_csv(arcs, mf.net.dag);
    }
    {
        auto trace = open_out(dir / "trace.csv");
        csv::write_row(trace, {"iteration", "move", "parent", "child", "delta", "score"});
        csv::write_row(trace, {"0", "start", "", "", "0", fmt(res.initial_score)});
        for (const auto& t : res.trace)
            csv::write_row(trace, {std::to_string(t.iteration), std::string(graph::to_string(t.move.type)),
                                   t.move.parent, t.move.child, fmt(t.delta), fmt(t.score)});
    }
    {
        auto bic = open_out(dir / "bic.csv");
        csv::write_row(bic, {"node", "family", "parents", "loglik", "n_params", "bic", "bic_neg2"});
        for (const auto& r : search::bic_table(mf.net)) {
            std::string parents;
            for (const auto& p : r.parents) parents += (parents.empty() ? "" : ";") + p;
            csv::write_row(bic, {r.node, std::string(to_string(r.family)), parents, fmt(r.loglik),
                                 std::to_string(r.n_params), fmt(r.bic), fmt(r.bic_neg2)});
        }
    }
    {
        // bic: larger is better; bic_neg2: smaller is better.
        auto audit = open_out(dir / "bic_audit.csv");
        csv::write_row(audit, {"node", "table", "removed", "loglik", "n_params", "bic", "bic_neg2"});
        for (const auto& m : mf.net.nodes) {
            if (m.family == Family::multinomial_root) continue;
            const auto t = search::backward_eliminate(m.node, m.parents, ds, roles);
            write_bic_rows(audit, t.with_random_effects, m.node, "as_fitted");
            write_bic_rows(audit, t.fixed_only, m.node, "fixed_only");
        }
    }
    log::info("learned " + std::to_string(mf.net.dag.arc_count()) + " arcs, score " + fmt(mf.net.score()) +
              " after " + std::to_string(res.trace.size()) + " moves");
}

// ---------------------------------------------------------------- predict

struct PredictOpts {
    std::string model, evidence, query, out, cluster_evidence = "observed", kde_dir;
    bool cascade = false;
};

std::vector<infer::Evidence> read_evidence(const std::string& path, const FittedNetwork& net,
                                           const std::string& query) {
    const auto root = net.cluster_node();
    std::vector<infer::Evidence> out;
    auto convert = [&](const std::string& node, const std::string& text) -> infer::EvidenceValue {
        if (root && node == *root) return text;
        auto v = csv::parse_double(text);
        if (!v) throw DataError("evidence for " + node + " is not numeric: " + text);
        return *v;
    };
    if (fs::path(path).extension() == ".json") {
        const json j = read_json(path);
        const json rows = j.is_array() ? j : json::array({j});
        for (const auto& row : rows) {
            infer::Evidence ev;
            for (const auto& [k, v] : row.items()) {
                if (!net.dag.index_of(k)) throw DataError("evidence names unknown node " + k);
                if (v.is_string())
                    ev[k] = convert(k, v.get<std::string>());
                else if (root && k == *root)
                    ev[k] = csv::format_double(v.get<double>());
                else
                    ev[k] = v.get<double>();
            }
            out.push_back(std::move(ev));
        }
        return out;
    }
    const auto rows = csv::read_file(path);
    if (rows.empty()) throw DataError(path + ": empty evidence file");
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() != rows[0].size()) throw DataError(path + ": row " + std::to_string(r) + " has the wrong width");
        infer::Evidence ev;
        for (std::size_t c = 0; c < rows[0].size(); ++c) {
            const auto& k = rows[0][c];
            // Non-network columns and the query column are ignored; empty cells are unobserved.
            if (k == query || !net.dag.index_of(k) || rows[r][c].empty()) continue;
            ev[k] = convert(k, rows[r][c]);
        }
        out.push_back(std::move(ev));
    }
    return out;
}

void cmd_predict(const PredictOpts& o, const Common& c) {
    const auto mf = ModelFile::from_json(read_json(o.model));
    const std::string query = o.query.empty() ? mf.target() : o.query;
    auto evidence = read_evidence(o.evidence, mf.net, query);
    const auto mode = parse_cluster_evidence(o.cluster_evidence);
    const auto root = mf.net.cluster_node();

    auto out = open_out(o.out);
    csv::write_row(out, {"row", "mean", "q10", "q50", "q90", "ess"});
    for (std::size_t r = 0; r < evidence.size(); ++r) {
        auto& ev = evidence[r];
        if (mode == infer::ClusterEvidence::marginal && root) ev.erase(*root);
        const std::uint64_t seed = derive_seed(c.seed, r);
        infer::WeightedSample sample;
        if (o.cascade) {
            auto cas = infer::predict_cascade(mf.net, ev, query, mf.stage1(), c.particles, seed, c.threads);
            for (const auto& [k, v] : cas.stage1) ev[k] = v;
        }
        sample = infer::likelihood_weighting(mf.net, ev, query, c.particles, seed, c.threads);
        const auto p = infer::summarize(sample);
        csv::write_row(out, {std::to_string(r), fmt(p.mean), fmt(p.q10), fmt(p.q50), fmt(p.q90), fmt(p.ess)});
        if (!o.kde_dir.empty()) {
            const auto kde = infer::kde_interval(sample, 0.8);
            auto k = open_out(fs::path(o.kde_dir) / ("kde_row" + std::to_string(r) + ".csv"));
            csv::write_row(k, {"x", "density", "lo", "hi"});
            for (std::size_t i = 0; i < kde.grid.size(); ++i)
                csv::write_row(k, {fmt(kde.grid[i]), fmt(kde.density[i]), fmt(kde.lo), fmt(kde.hi)});
        }
    }
}

// ---------------------------------------------------------------- impute

struct ImputeOpts {
    std::string model, data, target, out, cluster_evidence = "observed";
};

void cmd_impute(const ImputeOpts& o, const Common& c) {
    const auto mf = ModelFile::from_json(read_json(o.model));
    const auto ds = mf.load_data(o.data);
    const std::string target = o.target.empty() ? mf.target() : o.target;
    const auto imputed = infer::impute(mf.net, ds, target, c.particles, c.seed,
                                       parse_cluster_evidence(o.cluster_evidence), c.threads);
    const auto observed = ds.continuous(target);
    auto out = open_out(o.out);
    csv::write_row(out, {"row", "observed", "imputed"});
    for (std::size_t r = 0; r < imputed.size(); ++r)
        csv::write_row(out, {std::to_string(r), fmt(observed[r]), fmt(imputed[r])});
    log::info("imputation MAPE " + fmt(eval::mape(observed, imputed)));
}

// ---------------------------------------------------------------- scenarios

struct ScenarioOpts {
    std::string model, data, scenarios, out, cluster_evidence = "observed";
};

void cmd_scenarios(const ScenarioOpts& o, const Common& c) {
    const auto mf = ModelFile::from_json(read_json(o.model));
    const auto ds = mf.load_data(o.data);
    const auto scenarios = o.scenarios.empty() ? eval::builtin_scenarios() : eval::scenarios_from_json(read_json(o.scenarios));
    const auto res = eval::run_scenarios(mf.net, ds, scenarios, mf.target(), c.particles, c.seed,
                                         parse_cluster_evidence(o.cluster_evidence), c.threads);
    auto out = open_out(o.out);
    csv::write_row(out, {"scenario", "evidence", "mape", "n"});
    for (const auto& r : res) {
        std::string ev;
        for (const auto& v : r.evidence_nodes) ev += (ev.empty() ? "" : ";") + v;
        csv::write_row(out, {std::to_string(r.id), ev, fmt(r.mape), std::to_string(r.n)});
    }
}

// ---------------------------------------------------------------- cv

struct CvOpts {
    std::string data, schema, constraints, clusters = "auto", out_dir = ".", scenarios, cluster_evidence = "observed";
    std::size_t reps = 50, max_parents = 8, max_k = 100;
    double fraction = 0.2;
    bool compare_baseline = false, no_standardize = false;
};

void write_cv(const fs::path& dir, const std::string& tag, const std::vector<eval::CvReport>& reps) {
    auto out = open_out(dir / ("cv_report" + tag + ".csv"));
    csv::write_row(out, {"replicate", "mape", "correlation", "n_test", "k", "arcs", "train_score"});
    for (const auto& r : reps)
        csv::write_row(out, {std::to_string(r.replicate), fmt(r.mape), fmt(r.correlation), std::to_string(r.n_test),
                             std::to_string(r.k), std::to_string(r.arcs.size()), fmt(r.train_score)});
    if (!reps.empty() && !reps[0].per_scenario.empty()) {
        auto sc = open_out(dir / ("scenario_mape" + tag + ".csv"));
        csv::write_row(sc, {"replicate", "scenario", "mape"});
        for (const auto& r : reps)
            for (const auto& [id, m] : r.per_scenario) csv::write_row(sc, {std::to_string(r.replicate), std::to_string(id), fmt(m)});
    }
    for (const auto& r : reps) {
        if (r.predicted.size() < 10) continue;
        infer::WeightedSample s{r.predicted, std::vector<double>(r.predicted.size(), 1.0),
                                static_cast<double>(r.predicted.size())};
        const auto kde = infer::kde_interval(s, 0.8);
        auto k = open_out(dir / ("kde_rep" + std::to_string(r.replicate) + tag + ".csv"));
        csv::write_row(k, {"x", "density", "lo", "hi"});
        for (std::size_t i = 0; i < kde.grid.size(); ++i)
            csv::write_row(k, {fmt(kde.grid[i]), fmt(kde.density[i]), fmt(kde.lo), fmt(kde.hi)});
    }
}

void cmd_cv(const CvOpts& o, const Common& c) {
    auto [declared, ds] = load(o.data, o.schema);
    const std::string name = cluster_name(declared);
    if (auto cl = ds.schema().cluster_column()) ds = ds.without_column(*cl);
    const auto roles = derive_roles(ds.schema().with_column({name, data::ColumnKind::discrete, data::ColumnRole::cluster}));

    eval::CvConfig cfg;
    cfg.reps = o.reps;
    cfg.fraction = o.fraction;
    cfg.particles = c.particles;
    cfg.seed = c.seed;
    cfg.threads = c.threads;
    cfg.clustering = {parse_clusters(o.clusters), o.max_k, !o.no_standardize};
    cfg.search.max_parents = o.max_parents;
    cfg.cluster_evidence = parse_cluster_evidence(o.cluster_evidence);
    if (o.scenarios == "builtin")
        cfg.scenarios = eval::builtin_scenarios();
    else if (!o.scenarios.empty())
        cfg.scenarios = eval::scenarios_from_json(read_json(o.scenarios));
    const auto constraints = load_constraints(o.constraints);

    const fs::path dir(o.out_dir);
    const auto reps = eval::cross_validate(ds, roles, constraints, cfg);
    write_cv(dir, "", reps);
    if (!o.compare_baseline) return;

    const auto base = eval::cross_validate(ds, baseline_roles(roles), constraints, cfg);
    write_cv(dir, "_baseline", base);
    std::vector<double> ea, eb;
    for (std::size_t r = 0; r < reps.size(); ++r)
        for (std::size_t i = 0; i < reps[r].observed.size(); ++i) {
            ea.push_back((reps[r].observed[i] - reps[r].predicted[i]) / reps[r].observed[i]);
            eb.push_back((base[r].observed[i] - base[r].predicted[i]) / base[r].observed[i]);
        }
    auto out = open_out(dir / "dm_test.csv");
    csv::write_row(out, {"loss", "statistic", "p_value", "n"});
    for (auto [loss, label] : {std::pair{eval::Loss::absolute, "absolute"}, std::pair{eval::Loss::squared, "squared"}}) {
        const auto dm = eval::dm_test(ea, eb, loss);
        csv::write_row(out, {label, fmt(dm.statistic), fmt(dm.p_value), std::to_string(ea.size())});
    }
}

// ---------------------------------------------------------------- report

struct ReportOpts {
    std::vector<std::string> inputs;
    std::string out;
};

void cmd_report(const ReportOpts& o, const Common&) {
    json summary = json::object();
    for (const auto& path : o.inputs) {
        const auto rows = csv::read_file(path);
        json table = json::array();
        for (std::size_t r = 1; r < rows.size(); ++r) {
            json obj = json::object();
            for (std::size_t k = 0; k < rows[0].size() && k < rows[r].size(); ++k) {
                if (auto v = csv::parse_double(rows[r][k]))
                    obj[rows[0][k]] = *v;
                else
                    obj[rows[0][k]] = rows[r][k];
            }
            table.push_back(std::move(obj));
        }
        json entry = {{"rows", table}};
        // Column means for numeric columns.
        if (!rows.empty()) {
            json means = json::object();
            for (const auto& col : rows[0]) {
                double s = 0.0;
                std::size_t n = 0;
                for (const auto& row : table)
                    if (row.contains(col) && row[col].is_number()) {
                        s += row[col].get<double>();
                        ++n;
                    }
                if (n == table.size() && n > 0) means[col] = s / static_cast<double>(n);
            }
            entry["mean"] = means;
        }
        summary[fs::path(path).stem().string()] = entry;
    }
    write_text(o.out, summary.dump(2) + "\n");
}

}  // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"Hierarchical conditional Gaussian Bayesian networks"};
    app.set_version_flag("--version", std::string(HBNET_VERSION));
    app.require_subcommand(1);
    bool json_logs = false;
    bool verbose = false;
    app.add_flag("--json-logs", json_logs, "Log as JSON lines on stderr");
    app.add_flag("-v,--verbose", verbose, "Debug logging");

    Common common;
    auto add_common = [&](CLI::App* sub, bool particles) {
        sub->add_option("--seed", common.seed, "Random seed")->capture_default_str();
        sub->add_option("--threads", common.threads, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
        if (particles)
            sub->add_option("--particles", common.particles, "Likelihood-weighting particles")
                ->check(CLI::PositiveNumber)
                ->capture_default_str();
    };
    const auto evidence_modes = CLI::IsMember({"observed", "marginal"});

    SimulateOpts sim;
    auto* s_sim = app.add_subcommand("simulate", "Generate data from a network spec");
    s_sim->add_option("--spec", sim.spec, "Network spec JSON")->required()->check(CLI::ExistingFile);
    s_sim->add_option("--n-per-cluster", sim.n_per_cluster, "Rows per cluster: one value or a comma list")->required();
    s_sim->add_option("--out", sim.out, "Output CSV")->required();
    s_sim->add_option("--schema-out", sim.schema_out, "Also write the schema JSON");
    add_common(s_sim, false);

    ClusterOpts clu;
    auto* s_clu = app.add_subcommand("cluster", "Cluster groups by residual statistics");
    s_clu->add_option("--data", clu.data)->required();
    s_clu->add_option("--schema", clu.schema)->required();
    s_clu->add_option("--clusters", clu.clusters, "Number of clusters or 'auto'")->capture_default_str();
    s_clu->add_option("--max-k", clu.max_k, "Largest k tried by 'auto'")->capture_default_str();
    s_clu->add_flag("--no-standardize", clu.no_standardize, "Cluster the raw (mean, sd) residual features");
    s_clu->add_option("--out-dir", clu.out_dir)->capture_default_str();
    s_clu->add_option("--data-out", clu.data_out, "Write the data with the cluster column");
    add_common(s_clu, false);

    LearnOpts lrn;
    auto* s_lrn = app.add_subcommand("learn", "Learn structure and parameters");
    s_lrn->add_option("--data", lrn.data)->required();
    s_lrn->add_option("--schema", lrn.schema)->required();
    s_lrn->add_option("--constraints", lrn.constraints, "JSON with blacklist/whitelist arc lists");
    s_lrn->add_option("--clusters-from", lrn.clusters_from, "Labels CSV from the cluster command");
    s_lrn->add_option("--clusters", lrn.clusters, "Number of clusters or 'auto'")->capture_default_str();
    s_lrn->add_option("--max-k", lrn.max_k)->capture_default_str();
    s_lrn->add_flag("--no-standardize", lrn.no_standardize, "Cluster the raw (mean, sd) residual features");
    s_lrn->add_option("--max-parents", lrn.max_parents)->capture_default_str();
    s_lrn->add_option("--out", lrn.out, "Model JSON")->required();
    s_lrn->add_option("--out-dir", lrn.out_dir, "Directory for DAG, trace and BIC tables");
    s_lrn->add_flag("--baseline", lrn.baseline, "Fit every hierarchical node with fixed effects only");
    add_common(s_lrn, false);

    PredictOpts prd;
    auto* s_prd = app.add_subcommand("predict", "Predict a node from evidence");
    s_prd->add_option("--model", prd.model)->required()->check(CLI::ExistingFile);
    s_prd->add_option("--evidence", prd.evidence, "JSON object/array or CSV")->required()->check(CLI::ExistingFile);
    s_prd->add_option("--query", prd.query, "Query node (default: target)");
    s_prd->add_option("--out", prd.out)->required();
    s_prd->add_option("--cluster-evidence", prd.cluster_evidence)->check(evidence_modes)->capture_default_str();
    s_prd->add_option("--kde-dir", prd.kde_dir, "Write a KDE grid per row");
    s_prd->add_flag("--cascade", prd.cascade, "Predict phenological nodes first");
    add_common(s_prd, true);

    ImputeOpts imp;
    auto* s_imp = app.add_subcommand("impute", "Impute a node row by row from all other nodes");
    s_imp->add_option("--model", imp.model)->required()->check(CLI::ExistingFile);
    s_imp->add_option("--data", imp.data)->required();
    s_imp->add_option("--target", imp.target);
    s_imp->add_option("--out", imp.out)->required();
    s_imp->add_option("--cluster-evidence", imp.cluster_evidence)->check(evidence_modes)->capture_default_str();
    add_common(s_imp, true);

    ScenarioOpts scn;
    auto* s_scn = app.add_subcommand("scenarios", "MAPE of the target per evidence scenario");
    s_scn->add_option("--model", scn.model)->required()->check(CLI::ExistingFile);
    s_scn->add_option("--data", scn.data)->required();
    s_scn->add_option("--scenarios", scn.scenarios, "Scenario JSON (default: built-in table)");
    s_scn->add_option("--out", scn.out)->required();
    s_scn->add_option("--cluster-evidence", scn.cluster_evidence)->check(evidence_modes)->capture_default_str();
    add_common(s_scn, true);

    CvOpts cvo;
    auto* s_cv = app.add_subcommand("cv", "Hold-out cross-validation of the whole pipeline");
    s_cv->add_option("--data", cvo.data)->required();
    s_cv->add_option("--schema", cvo.schema)->required();
    s_cv->add_option("--constraints", cvo.constraints);
    s_cv->add_option("--reps", cvo.reps)->check(CLI::PositiveNumber)->capture_default_str();
    s_cv->add_option("--fraction", cvo.fraction)->check(CLI::Range(0.0, 1.0))->capture_default_str();
    s_cv->add_option("--clusters", cvo.clusters)->capture_default_str();
    s_cv->add_option("--max-k", cvo.max_k)->capture_default_str();
    s_cv->add_flag("--no-standardize", cvo.no_standardize, "Cluster the raw (mean, sd) residual features");
    s_cv->add_option("--max-parents", cvo.max_parents)->capture_default_str();
    s_cv->add_option("--scenarios", cvo.scenarios, "'builtin' or a scenario JSON");
    s_cv->add_option("--cluster-evidence", cvo.cluster_evidence)->check(evidence_modes)->capture_default_str();
    s_cv->add_option("--out-dir", cvo.out_dir)->capture_default_str();
    s_cv->add_flag("--compare-baseline", cvo.compare_baseline, "Also run the fixed-effects baseline and a DM test");
    add_common(s_cv, true);

    ReportOpts rep;
    auto* s_rep = app.add_subcommand("report", "Merge CSV outputs into one JSON summary");
    s_rep->add_option("--inputs", rep.inputs)->required()->check(CLI::ExistingFile);
    s_rep->add_option("--out", rep.out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }
    log::set_json(json_logs);
    if (verbose) log::set_min_level(log::Level::debug);

    try {
        if (s_sim->parsed()) cmd_simulate(sim, common);
        if (s_clu->parsed()) cmd_cluster(clu, common);
        if (s_lrn->parsed()) cmd_learn(lrn, common);
        if (s_prd->parsed()) cmd_predict(prd, common);
        if (s_imp->parsed()) cmd_impute(imp, common);
        if (s_scn->parsed()) cmd_scenarios(scn, common);
        if (s_cv->parsed()) cmd_cv(cvo, common);
        if (s_rep->parsed()) cmd_report(rep, common);
    } catch (const CLI::ValidationError& e) {
        log::error(e.what());
        return 1;
    } catch (const std::exception& e) {
        log::error(e.what());
        return 2;
    }
    return 0;
}

}  // namespace hbnet::cli
