#include <cmath>

#include <doctest.h>

#include "helpers.hpp"
#include "oracles.hpp"
#include "hbnet/error.hpp"
#include "hbnet/synth.hpp"

using namespace hbnet;
using namespace testing;

namespace {

double mean_of(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double cov_of(std::span<const double> a, std::span<const double> b) {
    const double ma = mean_of(a), mb = mean_of(b);
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - ma) * (b[i] - mb);
    return s / static_cast<double>(a.size() - 1);
}

/// One-way ANOVA F statistic of `v` over the cluster column.
double anova_f(const data::Dataset& ds, const std::string& col) {
    const auto v = ds.continuous(col);
    const auto& f = ds.column("F");
    const std::size_t J = f.levels.size(), n = v.size();
    std::vector<double> sum(J, 0.0), cnt(J, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        sum[static_cast<std::size_t>(f.codes[i])] += v[i];
        cnt[static_cast<std::size_t>(f.codes[i])] += 1;
    }
    const double grand = mean_of(v);
    double between = 0.0, within = 0.0;
    for (std::size_t j = 0; j < J; ++j) between += cnt[j] * std::pow(sum[j] / cnt[j] - grand, 2);
    for (std::size_t i = 0; i < n; ++i) {
        const auto j = static_cast<std::size_t>(f.codes[i]);
        within += std::pow(v[i] - sum[j] / cnt[j], 2);
    }
    return (between / static_cast<double>(J - 1)) / (within / static_cast<double>(n - J));
}

}  // namespace

TEST_CASE("generate is deterministic in the seed") {
    auto spec = six_node_spec(4, 2.0);
    std::vector<std::size_t> sizes{10, 20, 5, 15};
    auto a = synth::generate(spec, sizes, 9);
    auto b = synth::generate(spec, sizes, 9);
    auto c = synth::generate(spec, sizes, 10);
    CHECK(a == b);
    CHECK_FALSE(a == c);
    CHECK(a.n_rows() == 50);
    CHECK(a.schema().target().name == "Y");
    CHECK(a.column("F").levels == std::vector<std::string>{"1", "2", "3", "4"});
    auto d = synth::generate(spec, std::size_t{200}, 3);
    CHECK(d.n_rows() == 200);
}

TEST_CASE("groups are spread round-robin inside clusters") {
    auto spec = six_node_spec(3, 1.0);
    spec.groups_per_cluster = 2;
    std::vector<std::size_t> sizes{4, 4, 4};
    auto ds = synth::generate(spec, sizes, 1);
    const auto& g = ds.column("group");
    const auto& f = ds.column("F");
    CHECK(g.levels.size() == 6);
    for (std::size_t i = 0; i < ds.n_rows(); ++i)
        CHECK(g.codes[i] / 2 == f.codes[i]);
}

TEST_CASE("zero variances give the deterministic structural values") {
    auto spec = six_node_spec(3, 0.0, 0.0);
    spec.nodes[0].sigma2 = 0.0;
    std::vector<std::size_t> sizes{3, 3, 3};
    auto ds = synth::generate(spec, sizes, 4);
    for (std::size_t i = 0; i < ds.n_rows(); ++i) {
        CHECK(ds.continuous("W1")[i] == 20.0);
        CHECK(ds.continuous("W2")[i] == 15.0);
        CHECK(ds.continuous("P1")[i] == 30.0);
        CHECK(ds.continuous("P2")[i] == 7.5);
        CHECK(ds.continuous("P3")[i] == doctest::Approx(26.0));
        CHECK(ds.continuous("Y")[i] == doctest::Approx(40.0 + 7.5 + 1.2 * 26.0));
    }
}

TEST_CASE("single-cluster sample covariance matches the implied covariance") {
    auto spec = six_node_spec(1, 0.0);
    std::vector<std::size_t> sizes{20000};
    auto ds = synth::generate(spec, sizes, 12);
    const std::vector<std::string> names{"W1", "W2", "P1", "P2", "P3", "Y"};
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(6, 6);
    B(0, 1) = 0.5;   // W1 -> W2
    B(0, 2) = 1.0;   // W1 -> P1
    B(1, 3) = -1.5;  // W2 -> P2
    B(2, 4) = 0.8;   // P1 -> P3
    B(3, 5) = 1.0;   // P2 -> Y
    B(4, 5) = 1.2;   // P3 -> Y
    Eigen::VectorXd mu(6), d(6);
    mu << 20, 5, 10, 30, 2, 40;
    d << 4, 1, 1, 1, 1, 1;
    auto [mean, cov] = oracle::sem_joint(B, mu, d);
    for (Eigen::Index a = 0; a < 6; ++a) {
        const auto va = ds.continuous(names[static_cast<std::size_t>(a)]);
        CHECK(mean_of(va) == doctest::Approx(mean(a)).epsilon(0.01));
        for (Eigen::Index b = a; b < 6; ++b) {
            const auto vb = ds.continuous(names[static_cast<std::size_t>(b)]);
            const double scale = std::sqrt(cov(a, a) * cov(b, b));
            CHECK(std::fabs(cov_of(va, vb) - cov(a, b)) < 0.05 * scale);
        }
    }
}

TEST_CASE("random intercepts produce between-cluster variance") {
    std::vector<std::size_t> sizes(10, 100);
    auto flat = synth::generate(six_node_spec(10, 0.0), sizes, 5);
    auto strong = synth::generate(six_node_spec(10, 4.0), sizes, 5);
    // F(9, 990) 99.9th percentile is about 3.1.
    CHECK(anova_f(strong, "P1") > 20.0);
    CHECK(anova_f(flat, "P1") < 3.1);
    CHECK(anova_f(strong, "W1") < 3.1);
}

TEST_CASE("hetero target: residual sd scales with |mean|^theta") {
    synth::NetSpec s;
    s.cluster_probs = {0.5, 0.5};
    s.nodes.push_back({"Y", ColumnRole::target, Family::hetero_mixed_gaussian, {}, 16.0, {}, 1.0, {}, 0.0, {0.0, 0.5}});
    std::vector<std::size_t> sizes{20000, 20000};
    auto ds = synth::generate(s, sizes, 2);
    const auto y = ds.continuous("Y");
    std::span<const double> y0(y.data(), 20000), y1(y.data() + 20000, 20000);
    // Calibration: means within 3 standard errors, sd 1 and 16^0.5 = 4.
    CHECK(std::fabs(mean_of(y0) - 16.0) < 3.0 * 1.0 / std::sqrt(20000.0));
    CHECK(std::fabs(mean_of(y1) - 16.0) < 3.0 * 4.0 / std::sqrt(20000.0));
    CHECK(std::sqrt(cov_of(y0, y0)) == doctest::Approx(1.0).epsilon(0.03));
    CHECK(std::sqrt(cov_of(y1, y1)) == doctest::Approx(4.0).epsilon(0.03));
}

TEST_CASE("spec validation and JSON round trip") {
    auto spec = six_node_spec(3, 1.0);
    auto back = synth::NetSpec::from_json(spec.to_json());
    CHECK(back.to_json() == spec.to_json());
    CHECK(spec.dag().has_arc("F", "P1"));
    CHECK_FALSE(spec.dag().has_arc("F", "W1"));
    CHECK(spec.roles()[0].family == Family::multinomial_root);

    auto bad = spec;
    bad.cluster_probs = {0.5, 0.2, 0.2};
    CHECK_THROWS_AS(bad.validate(), ModelError);
    bad = spec;
    bad.nodes[2].betas.clear();
    CHECK_THROWS_AS(bad.validate(), ModelError);
    bad = spec;
    bad.nodes[2].re_cov(0, 0) = -1.0;
    CHECK_THROWS_AS(bad.validate(), ModelError);
    bad = spec;
    bad.nodes[5].theta.pop_back();
    CHECK_THROWS_AS(bad.validate(), ModelError);
    bad = spec;
    bad.nodes[0].parents = {"Y"};
    bad.nodes[0].betas = {1.0};
    CHECK_THROWS_AS(bad.validate(), ModelError);
    bad = spec;
    bad.nodes[0].role = ColumnRole::target;
    CHECK_THROWS_AS(bad.validate(), ModelError);
    CHECK_THROWS_AS(synth::generate(spec, std::vector<std::size_t>{1, 2}, 1), ModelError);
    CHECK_THROWS_AS(synth::NetSpec::from_json(nlohmann::json::parse(R"({"nodes": []})")), ModelError);
}
