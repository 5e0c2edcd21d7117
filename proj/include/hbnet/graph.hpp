#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace hbnet::graph {

/// (parent, child)
using Arc = std::pair<std::string, std::string>;

/// Directed acyclic graph over named nodes, stored as a dense adjacency
/// matrix in node declaration order. Value type; mutation returns copies.
class Dag {
public:
    Dag() = default;
    explicit Dag(std::vector<std::string> nodes);
    /// Throws ModelError if the arcs form a cycle or name unknown nodes.
    Dag(std::vector<std::string> nodes, const std::vector<Arc>& arcs);

    const std::vector<std::string>& nodes() const noexcept { return nodes_; }
    std::size_t size() const noexcept { return nodes_.size(); }
    std::optional<std::size_t> index_of(std::string_view name) const;
    /// Index of `name`; throws ModelError for unknown nodes.
    std::size_t at(std::string_view name) const;

    bool has_arc(std::size_t parent, std::size_t child) const { return adj_[parent * n() + child] != 0; }
    bool has_arc(std::string_view parent, std::string_view child) const;
    std::size_t arc_count() const;
    /// Arcs ordered by (parent index, child index).
    std::vector<Arc> arcs() const;

    std::vector<std::size_t> parent_indices(std::size_t child) const;
    std::vector<std::size_t> child_indices(std::size_t parent) const;
    std::vector<std::string> parents(std::string_view node) const;
    std::vector<std::string> children(std::string_view node) const;

    /// True when a directed path from -> ... -> to exists (from == to counts).
    bool reachable(std::size_t from, std::size_t to) const;

    /// Unchecked edits; callers guarantee acyclicity.
    Dag with_arc(std::size_t parent, std::size_t child) const;
    Dag without_arc(std::size_t parent, std::size_t child) const;

    bool operator==(const Dag&) const = default;

private:
    std::size_t n() const noexcept { return nodes_.size(); }

    std::vector<std::string> nodes_;
    std::vector<char> adj_;
};

struct ConstraintSet {
    std::set<Arc> blacklist;
    std::set<Arc> whitelist;

    /// Throws ModelError when the lists overlap, name unknown nodes, or the
    /// whitelist alone is cyclic.
    void validate(const std::vector<std::string>& nodes) const;

    /// {"blacklist": [[p, c], ...], "whitelist": [[p, c], ...]}
    static ConstraintSet from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

enum class MoveType { add, remove, reverse };
std::string_view to_string(MoveType t);

struct Move {
    MoveType type = MoveType::add;
    std::string parent;
    std::string child;

    bool operator==(const Move&) const = default;
};

enum class Rejection { none, cycle, blacklisted, whitelist_violation, not_applicable };
std::string_view to_string(Rejection r);

struct MoveOutcome {
    std::optional<Dag> dag;
    Rejection rejection = Rejection::none;

    bool accepted() const noexcept { return dag.has_value(); }
};

/// Applies an add/delete/reverse move. `not_applicable` covers adding an
/// existing arc or self-loop and deleting/reversing a missing arc.
MoveOutcome apply_move(const Dag& g, const Move& move, const ConstraintSet& c);

/// Kahn's algorithm; among ready nodes the earliest declared goes first.
std::vector<std::size_t> topological_indices(const Dag& g);
std::vector<std::string> topological_order(const Dag& g);

/// Parents, children and co-parents of `node`, in declaration order.
std::vector<std::string> markov_blanket(const Dag& g, std::string_view node);

std::string to_dot(const Dag& g);
void write_arcs_csv(std::ostream& out, const Dag& g);
std::vector<Arc> read_arcs_csv(std::istream& in);

}  // namespace hbnet::graph
