#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace hbnet::data {

enum class ColumnKind { continuous, discrete };
enum class ColumnRole { target, phenological, weather, group_key, cluster };

std::string_view to_string(ColumnKind kind);
std::string_view to_string(ColumnRole role);
ColumnKind parse_kind(std::string_view s);
ColumnRole parse_role(std::string_view s);

struct ColumnSpec {
    std::string name;
    ColumnKind kind = ColumnKind::continuous;
    ColumnRole role = ColumnRole::phenological;

    bool operator==(const ColumnSpec&) const = default;
};

/// Ordered, validated list of column declarations.
///
/// Invariants: names are unique, exactly one continuous target, at most one
/// discrete cluster column, group keys are discrete.
class Schema {
public:
    Schema() = default;
    explicit Schema(std::vector<ColumnSpec> columns);

    const std::vector<ColumnSpec>& columns() const noexcept { return columns_; }
    std::size_t size() const noexcept { return columns_.size(); }

    std::optional<std::size_t> index_of(std::string_view name) const;
    const ColumnSpec& at(std::string_view name) const;
    const ColumnSpec& target() const;
    std::vector<std::string> names_with_role(ColumnRole role) const;
    std::optional<std::string> cluster_column() const;

    /// Appends `spec`, or replaces the column of the same name.
    Schema with_column(ColumnSpec spec) const;
    Schema without_column(std::string_view name) const;

    static Schema from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;

    bool operator==(const Schema&) const = default;

private:
    std::vector<ColumnSpec> columns_;
};

Schema load_schema(const std::string& path);

/// One typed column. Discrete columns store codes into a sorted level list.
struct Column {
    ColumnSpec spec;
    std::vector<double> values;
    std::vector<int> codes;
    std::vector<std::string> levels;

    std::size_t size() const noexcept {
        return spec.kind == ColumnKind::continuous ? values.size() : codes.size();
    }
    const std::string& label(std::size_t row) const { return levels.at(codes.at(row)); }

    static Column continuous(ColumnSpec spec, std::vector<double> values);
    /// Builds the level set from the labels (numeric-aware sort).
    static Column discrete(ColumnSpec spec, const std::vector<std::string>& labels);
    static Column discrete_coded(ColumnSpec spec, std::vector<int> codes,
                                 std::vector<std::string> levels);

    bool operator==(const Column&) const = default;
};

/// Sorts labels numerically when every label parses as a number, otherwise
/// lexicographically; duplicates removed.
std::vector<std::string> sorted_levels(std::vector<std::string> labels);

using GroupKey = std::vector<std::string>;

/// Distinct group keys in lexicographic order and each row's group index.
struct Groups {
    std::vector<GroupKey> keys;
    std::vector<std::size_t> row_group;
    std::vector<std::vector<std::size_t>> rows;
};

/// Immutable column-typed table.
class Dataset {
public:
    Dataset(Schema schema, std::vector<Column> columns);

    const Schema& schema() const noexcept { return schema_; }
    std::size_t n_rows() const noexcept { return n_; }

    bool has_column(std::string_view name) const { return schema_.index_of(name).has_value(); }
    const Column& column(std::string_view name) const;
    const Column& column(std::size_t i) const { return columns_.at(i); }
    const std::vector<Column>& columns() const noexcept { return columns_; }

    /// Values of a continuous column; throws DataError for discrete columns.
    std::span<const double> continuous(std::string_view name) const;

    Dataset select_rows(std::span<const std::size_t> rows) const;
    Dataset with_column(Column column) const;
    Dataset without_column(std::string_view name) const;

    GroupKey group_key(std::size_t row) const;
    Groups groups() const;

    bool operator==(const Dataset&) const = default;

private:
    Schema schema_;
    std::vector<Column> columns_;
    std::size_t n_ = 0;
};

struct LoadResult {
    Dataset dataset;
    std::size_t dropped = 0;
};

/// Parses CSV against `schema`. Rows with an empty or unparseable cell are
/// dropped. A cluster column declared in the schema but absent from the file
/// is removed from the resulting schema.
LoadResult read_csv(std::istream& in, const Schema& schema);
LoadResult load_csv(const std::string& path, const Schema& schema);

void write_csv(std::ostream& out, const Dataset& ds);
void save_csv(const std::string& path, const Dataset& ds);

/// Adds N(0, sd^2) noise to the named continuous columns.
Dataset jitter(const Dataset& ds, std::span<const std::string> columns, double sd,
               std::uint64_t seed);

struct Split {
    Dataset train;
    Dataset test;
    std::vector<std::size_t> train_rows;
    std::vector<std::size_t> test_rows;
    std::vector<GroupKey> test_groups;
};

/// Group-atomic hold-out split: round-half-up(fraction * G) distinct group
/// keys (clamped to [1, G-1]) go to the test set with all their rows.
Split holdout_split(const Dataset& ds, double fraction, std::uint64_t seed);

}  // namespace hbnet::data
