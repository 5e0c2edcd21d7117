#include <set>
#include <sstream>

#include <doctest.h>

#include "oracles.hpp"
#include "hbnet/error.hpp"
#include "hbnet/graph.hpp"
#include "hbnet/rng.hpp"

using namespace hbnet;
using namespace hbnet::graph;

namespace {

oracle::Adj adjacency(const Dag& g) {
    oracle::Adj a(g.size(), std::vector<bool>(g.size(), false));
    for (std::size_t p = 0; p < g.size(); ++p)
        for (std::size_t c = 0; c < g.size(); ++c) a[p][c] = g.has_arc(p, c);
    return a;
}

Dag random_dag(Rng& rng, std::size_t n, double density) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < n; ++i) names.push_back(std::string(1, static_cast<char>('a' + i)));
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(order);
    std::vector<Arc> arcs;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (rng.uniform() < density) arcs.emplace_back(names[order[i]], names[order[j]]);
    return Dag(names, arcs);
}

}  // namespace

TEST_CASE("Dag construction") {
    Dag g({"a", "b", "c"}, {{"a", "b"}, {"b", "c"}});
    CHECK(g.arc_count() == 2);
    CHECK(g.has_arc("a", "b"));
    CHECK(g.parents("c") == std::vector<std::string>{"b"});
    CHECK(g.children("a") == std::vector<std::string>{"b"});
    CHECK(g.reachable(0, 2));
    CHECK_FALSE(g.reachable(2, 0));
    CHECK_THROWS_AS(Dag({"a", "b"}, {{"a", "b"}, {"b", "a"}}), ModelError);
    CHECK_THROWS_AS(Dag({"a"}, {{"a", "a"}}), ModelError);
    CHECK_THROWS_AS(Dag({"a"}, {{"a", "z"}}), ModelError);
    CHECK_THROWS_AS(g.at("z"), ModelError);
}

TEST_CASE("apply_move examples") {
    Dag g({"a", "b"});
    ConstraintSet none;
    auto r = apply_move(g, {MoveType::add, "a", "b"}, none);
    REQUIRE(r.accepted());
    CHECK(r.dag->has_arc("a", "b"));

    auto back = apply_move(*r.dag, {MoveType::add, "b", "a"}, none);
    CHECK_FALSE(back.accepted());
    CHECK(back.rejection == Rejection::cycle);

    ConstraintSet bl;
    bl.blacklist.insert({"b", "a"});
    auto rev = apply_move(*r.dag, {MoveType::reverse, "a", "b"}, bl);
    CHECK(rev.rejection == Rejection::blacklisted);
    CHECK(apply_move(g, {MoveType::add, "b", "a"}, bl).rejection == Rejection::blacklisted);

    ConstraintSet wl;
    wl.whitelist.insert({"a", "b"});
    CHECK(apply_move(*r.dag, {MoveType::remove, "a", "b"}, wl).rejection == Rejection::whitelist_violation);
    CHECK(apply_move(*r.dag, {MoveType::reverse, "a", "b"}, wl).rejection == Rejection::whitelist_violation);

    CHECK(apply_move(g, {MoveType::remove, "a", "b"}, none).rejection == Rejection::not_applicable);
    CHECK(apply_move(*r.dag, {MoveType::add, "a", "b"}, none).rejection == Rejection::not_applicable);
    CHECK_THROWS_AS(apply_move(g, {MoveType::add, "a", "q"}, none), ModelError);
}

TEST_CASE("reverse through a longer path is a cycle") {
    Dag g({"a", "b", "c"}, {{"a", "b"}, {"b", "c"}, {"a", "c"}});
    CHECK(apply_move(g, {MoveType::reverse, "a", "c"}, {}).rejection == Rejection::cycle);
    CHECK(apply_move(g, {MoveType::reverse, "b", "c"}, {}).accepted());
}

TEST_CASE("topological order") {
    CHECK(topological_order(Dag({"a", "b", "c"}, {{"a", "b"}, {"b", "c"}})) == std::vector<std::string>{"a", "b", "c"});
    CHECK(topological_order(Dag({"z", "y", "x"})) == std::vector<std::string>{"z", "y", "x"});
    Dag diamond({"d", "c", "b", "a"}, {{"a", "b"}, {"a", "c"}, {"b", "d"}, {"c", "d"}});
    // c is declared before b, so c goes first.
    CHECK(topological_order(diamond) == std::vector<std::string>{"a", "c", "b", "d"});
    Dag diamond2({"a", "b", "c", "d"}, {{"a", "b"}, {"a", "c"}, {"b", "d"}, {"c", "d"}});
    CHECK(topological_order(diamond2) == std::vector<std::string>{"a", "b", "c", "d"});
}

TEST_CASE("markov blanket examples") {
    Dag iso({"a", "b"});
    CHECK(markov_blanket(iso, "a").empty());
    Dag v({"a", "b", "c"}, {{"a", "c"}, {"b", "c"}});
    CHECK(markov_blanket(v, "a") == std::vector<std::string>{"b", "c"});
    CHECK_THROWS_AS(markov_blanket(v, "q"), ModelError);
}

TEST_CASE("markov blanket equals the d-separation oracle on random 6-node DAGs") {
    Rng rng(6);
    for (int trial = 0; trial < 40; ++trial) {
        auto g = random_dag(rng, 6, 0.4);
        auto adj = adjacency(g);
        for (std::size_t x = 0; x < 6; ++x) {
            auto mb = markov_blanket(g, g.nodes()[x]);
            std::set<std::size_t> got;
            for (const auto& n : mb) got.insert(g.at(n));
            const auto boundaries = oracle::markov_boundaries(adj, x);
            REQUIRE(boundaries.size() == 1);
            CHECK(boundaries[0] == got);
        }
    }
}

TEST_CASE("property: accepted moves stay acyclic and respect constraints") {
    Rng rng(7);
    for (int trial = 0; trial < 30; ++trial) {
        auto g = random_dag(rng, 6, 0.3);
        ConstraintSet c;
        const auto& names = g.nodes();
        for (int k = 0; k < 3; ++k) {
            const auto a = names[rng.below(6)], b = names[rng.below(6)];
            if (a != b && !g.has_arc(a, b) && !c.whitelist.count({a, b})) c.blacklist.insert({a, b});
        }
        for (const auto& arc : g.arcs())
            if (rng.uniform() < 0.3 && !c.blacklist.count(arc)) c.whitelist.insert(arc);
        for (int step = 0; step < 200; ++step) {
            const Move m{static_cast<MoveType>(rng.below(3)), names[rng.below(6)], names[rng.below(6)]};
            auto out = apply_move(g, m, c);
            if (!out.accepted()) continue;
            CHECK_FALSE(oracle::has_cycle(adjacency(*out.dag)));
            for (const auto& [p, ch] : c.blacklist) CHECK_FALSE(out.dag->has_arc(p, ch));
            for (const auto& [p, ch] : c.whitelist) CHECK(out.dag->has_arc(p, ch));
            if (m.type == MoveType::reverse) {
                auto undo = apply_move(*out.dag, {MoveType::reverse, m.child, m.parent}, c);
                if (undo.accepted()) CHECK(*undo.dag == g);
            }
            g = *out.dag;
        }
    }
}

TEST_CASE("property: spouses are symmetric") {
    Rng rng(8);
    for (int trial = 0; trial < 30; ++trial) {
        auto g = random_dag(rng, 6, 0.4);
        for (const auto& child : g.nodes()) {
            auto ps = g.parents(child);
            for (const auto& a : ps)
                for (const auto& b : ps) {
                    if (a == b) continue;
                    auto mb = markov_blanket(g, a);
                    CHECK(std::find(mb.begin(), mb.end(), b) != mb.end());
                }
        }
    }
}

TEST_CASE("constraint sets") {
    auto c = ConstraintSet::from_json(nlohmann::json::parse(R"({"blacklist": [["a","b"]], "whitelist": [["b","c"]]})"));
    CHECK(c.blacklist.count({"a", "b"}));
    CHECK(ConstraintSet::from_json(c.to_json()).whitelist == c.whitelist);
    c.validate({"a", "b", "c"});
    CHECK_THROWS_AS(c.validate({"a", "b"}), ModelError);
    ConstraintSet overlap;
    overlap.blacklist.insert({"a", "b"});
    overlap.whitelist.insert({"a", "b"});
    CHECK_THROWS_AS(overlap.validate({"a", "b"}), ModelError);
    ConstraintSet cyc;
    cyc.whitelist = {{"a", "b"}, {"b", "a"}};
    CHECK_THROWS_AS(cyc.validate({"a", "b"}), ModelError);
}

TEST_CASE("arc CSV and DOT") {
    Dag g({"a", "b", "c"}, {{"a", "c"}, {"b", "c"}});
    std::ostringstream out;
    write_arcs_csv(out, g);
    CHECK(out.str() == "parent,child\na,c\nb,c\n");
    std::istringstream in(out.str());
    CHECK(read_arcs_csv(in) == g.arcs());
    const auto dot = to_dot(g);
    CHECK(dot.find("digraph") != std::string::npos);
    CHECK(dot.find("\"a\" -> \"c\"") != std::string::npos);
}
