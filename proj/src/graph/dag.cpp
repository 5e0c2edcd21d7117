#include <algorithm>
#include <map>
#include <ostream>
#include <queue>
#include <sstream>

#include "hbnet/csv.hpp"
#include "hbnet/error.hpp"
#include "hbnet/graph.hpp"

namespace hbnet::graph {

Dag::Dag(std::vector<std::string> nodes) : nodes_(std::move(nodes)), adj_(nodes_.size() * nodes_.size(), 0) {
    std::set<std::string> seen;
    for (const auto& s : nodes_)
        if (!seen.insert(s).second) throw ModelError("dag: duplicate node " + s);
}

Dag::Dag(std::vector<std::string> nodes, const std::vector<Arc>& arcs) : Dag(std::move(nodes)) {
    for (const auto& [p, c] : arcs) {
        const std::size_t i = at(p), j = at(c);
        if (i == j) throw ModelError("dag: self-loop on " + p);
        if (reachable(j, i)) throw ModelError("dag: arc " + p + " -> " + c + " closes a cycle");
        adj_[i * n() + j] = 1;
    }
}

std::optional<std::size_t> Dag::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (nodes_[i] == name) return i;
    return std::nullopt;
}

std::size_t Dag::at(std::string_view name) const {
    if (auto i = index_of(name)) return *i;
    throw ModelError("dag: unknown node " + std::string(name));
}

bool Dag::has_arc(std::string_view parent, std::string_view child) const { return has_arc(at(parent), at(child)); }

std::size_t Dag::arc_count() const { return static_cast<std::size_t>(std::count(adj_.begin(), adj_.end(), 1)); }

std::vector<Arc> Dag::arcs() const {
    std::vector<Arc> out;
    for (std::size_t i = 0; i < n(); ++i)
        for (std::size_t j = 0; j < n(); ++j)
            if (has_arc(i, j)) out.emplace_back(nodes_[i], nodes_[j]);
    return out;
}

std::vector<std::size_t> Dag::parent_indices(std::size_t child) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < n(); ++i)
        if (has_arc(i, child)) out.push_back(i);
    return out;
}

std::vector<std::size_t> Dag::child_indices(std::size_t parent) const {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < n(); ++j)
        if (has_arc(parent, j)) out.push_back(j);
    return out;
}

std::vector<std::string> Dag::parents(std::string_view node) const {
    std::vector<std::string> out;
    for (auto i : parent_indices(at(node))) out.push_back(nodes_[i]);
    return out;
}

std::vector<std::string> Dag::children(std::string_view node) const {
    std::vector<std::string> out;
    for (auto j : child_indices(at(node))) out.push_back(nodes_[j]);
    return out;
}

bool Dag::reachable(std::size_t from, std::size_t to) const {
    if (from == to) return true;
    std::vector<char> seen(n(), 0);
    std::vector<std::size_t> stack{from};
    seen[from] = 1;
    while (!stack.empty()) {
        const std::size_t u = stack.back();
        stack.pop_back();
        for (std::size_t v = 0; v < n(); ++v) {
            if (!has_arc(u, v) || seen[v]) continue;
            if (v == to) return true;
            seen[v] = 1;
            stack.push_back(v);
        }
    }
    return false;
}

Dag Dag::with_arc(std::size_t parent, std::size_t child) const {
    Dag g = *this;
    g.adj_[parent * n() + child] = 1;
    return g;
}

Dag Dag::without_arc(std::size_t parent, std::size_t child) const {
    Dag g = *this;
    g.adj_[parent * n() + child] = 0;
    return g;
}

void ConstraintSet::validate(const std::vector<std::string>& nodes) const {
    std::set<std::string> known(nodes.begin(), nodes.end());
    for (const auto* list : {&blacklist, &whitelist})
        for (const auto& [p, c] : *list)
            if (!known.count(p) || !known.count(c))
                throw ModelError("constraints: arc " + p + " -> " + c + " names an unknown node");
    for (const auto& a : whitelist)
        if (blacklist.count(a)) throw ModelError("constraints: arc " + a.first + " -> " + a.second + " is both white- and blacklisted");
    // Building the DAG rejects a cyclic whitelist.
    Dag(nodes, std::vector<Arc>(whitelist.begin(), whitelist.end()));
}

ConstraintSet ConstraintSet::from_json(const nlohmann::json& j) {
    ConstraintSet c;
    auto read = [&](const char* key, std::set<Arc>& out) {
        if (!j.contains(key)) return;
        for (const auto& a : j.at(key)) {
            if (!a.is_array() || a.size() != 2) throw ModelError(std::string("constraints: ") + key + " entries must be [parent, child]");
            out.emplace(a[0].get<std::string>(), a[1].get<std::string>());
        }
    };
    if (!j.is_object()) throw ModelError("constraints: expected a JSON object");
    try {
        read("blacklist", c.blacklist);
        read("whitelist", c.whitelist);
    } catch (const nlohmann::json::exception& ex) {
        throw ModelError(std::string("constraints: ") + ex.what());
    }
    return c;
}

nlohmann::json ConstraintSet::to_json() const {
    nlohmann::json j = {{"blacklist", nlohmann::json::array()}, {"whitelist", nlohmann::json::array()}};
    for (const auto& [p, c] : blacklist) j["blacklist"].push_back({p, c});
    for (const auto& [p, c] : whitelist) j["whitelist"].push_back({p, c});
    return j;
}

std::string_view to_string(MoveType t) {
    switch (t) {
        case MoveType::add: return "add";
        case MoveType::remove: return "delete";
        case MoveType::reverse: return "reverse";
    }
    return "?";
}

std::string_view to_string(Rejection r) {
    switch (r) {
        case Rejection::none: return "none";
        case Rejection::cycle: return "cycle";
        case Rejection::blacklisted: return "blacklisted";
        case Rejection::whitelist_violation: return "whitelist_violation";
        case Rejection::not_applicable: return "not_applicable";
    }
    return "?";
}

MoveOutcome apply_move(const Dag& g, const Move& move, const ConstraintSet& c) {
    const std::size_t p = g.at(move.parent), ch = g.at(move.child);
    auto reject = [](Rejection r) { return MoveOutcome{std::nullopt, r}; };
    const Arc arc{move.parent, move.child};
    const Arc flipped{move.child, move.parent};

    switch (move.type) {
        case MoveType::add:
            if (p == ch || g.has_arc(p, ch)) return reject(Rejection::not_applicable);
            if (c.blacklist.count(arc)) return reject(Rejection::blacklisted);
            if (g.reachable(ch, p)) return reject(Rejection::cycle);
            return {g.with_arc(p, ch), Rejection::none};
        case MoveType::remove:
            if (!g.has_arc(p, ch)) return reject(Rejection::not_applicable);
            if (c.whitelist.count(arc)) return reject(Rejection::whitelist_violation);
            return {g.without_arc(p, ch), Rejection::none};
        case MoveType::reverse: {
            if (!g.has_arc(p, ch)) return reject(Rejection::not_applicable);
            if (c.whitelist.count(arc)) return reject(Rejection::whitelist_violation);
            if (c.blacklist.count(flipped)) return reject(Rejection::blacklisted);
            Dag without = g.without_arc(p, ch);
            if (without.reachable(p, ch)) return reject(Rejection::cycle);
            return {without.with_arc(ch, p), Rejection::none};
        }
    }
    return reject(Rejection::not_applicable);
}

std::vector<std::size_t> topological_indices(const Dag& g) {
    const std::size_t n = g.size();
    std::vector<std::size_t> indegree(n, 0);
    for (std::size_t j = 0; j < n; ++j) indegree[j] = g.parent_indices(j).size();
    std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
    for (std::size_t i = 0; i < n; ++i)
        if (indegree[i] == 0) ready.push(i);
    std::vector<std::size_t> order;
    order.reserve(n);
    while (!ready.empty()) {
        const std::size_t u = ready.top();
        ready.pop();
        order.push_back(u);
        for (auto v : g.child_indices(u))
            if (--indegree[v] == 0) ready.push(v);
    }
    if (order.size() != n) throw ModelError("topological_order: graph has a cycle");
    return order;
}

std::vector<std::string> topological_order(const Dag& g) {
    std::vector<std::string> out;
    for (auto i : topological_indices(g)) out.push_back(g.nodes()[i]);
    return out;
}

std::vector<std::string> markov_blanket(const Dag& g, std::string_view node) {
    const std::size_t x = g.at(node);
    std::vector<char> in(g.size(), 0);
    for (auto p : g.parent_indices(x)) in[p] = 1;
    for (auto c : g.child_indices(x)) {
        in[c] = 1;
        for (auto s : g.parent_indices(c)) in[s] = 1;
    }
    in[x] = 0;
    std::vector<std::string> out;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (in[i]) out.push_back(g.nodes()[i]);
    return out;
}

std::string to_dot(const Dag& g) {
    std::ostringstream os;
    os << "digraph hbnet {\n";
    for (const auto& v : g.nodes()) os << "  \"" << v << "\";\n";
    for (const auto& [p, c] : g.arcs()) os << "  \"" << p << "\" -> \"" << c << "\";\n";
    os << "}\n";
    return os.str();
}

void write_arcs_csv(std::ostream& out, const Dag& g) {
    csv::write_row(out, {"parent", "child"});
    for (const auto& [p, c] : g.arcs()) csv::write_row(out, {p, c});
}

std::vector<Arc> read_arcs_csv(std::istream& in) {
    auto rows = csv::read(in);
    if (rows.empty() || rows[0] != csv::Row{"parent", "child"})
        throw DataError("arc csv: expected header parent,child");
    std::vector<Arc> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() != 2) throw DataError("arc csv: row " + std::to_string(i) + " needs 2 fields");
        out.emplace_back(rows[i][0], rows[i][1]);
    }
    return out;
}

}  // namespace hbnet::graph
