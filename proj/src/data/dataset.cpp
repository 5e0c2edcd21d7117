#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "hbnet/csv.hpp"
#include "hbnet/data.hpp"
#include "hbnet/error.hpp"

namespace hbnet::data {

namespace {

constexpr std::size_t kMaxLevels = 10000;

std::string join(const std::vector<std::string>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        out += v[i];
    }
    return out;
}

bool is_missing(std::string_view s) {
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
    return s.empty() || s == "NA" || s == "NaN" || s == "nan";
}

}  // namespace

std::string_view to_string(ColumnKind kind) {
    return kind == ColumnKind::continuous ? "continuous" : "discrete";
}

std::string_view to_string(ColumnRole role) {
    switch (role) {
        case ColumnRole::target: return "target";
        case ColumnRole::phenological: return "phenological";
        case ColumnRole::weather: return "weather";
        case ColumnRole::group_key: return "group_key";
        case ColumnRole::cluster: return "cluster";
    }
    return "phenological";
}

ColumnKind parse_kind(std::string_view s) {
    if (s == "continuous") return ColumnKind::continuous;
    if (s == "discrete") return ColumnKind::discrete;
    throw DataError("unknown column kind: " + std::string(s));
}

ColumnRole parse_role(std::string_view s) {
    if (s == "target") return ColumnRole::target;
    if (s == "phenological") return ColumnRole::phenological;
    if (s == "weather") return ColumnRole::weather;
    if (s == "group_key") return ColumnRole::group_key;
    if (s == "cluster") return ColumnRole::cluster;
    throw DataError("unknown column role: " + std::string(s));
}

// ---------------------------------------------------------------- Schema

Schema::Schema(std::vector<ColumnSpec> columns) : columns_(std::move(columns)) {
    std::set<std::string> seen;
    int targets = 0;
    int clusters = 0;
    for (const auto& c : columns_) {
        if (c.name.empty()) throw DataError("schema: empty column name");
        if (!seen.insert(c.name).second) throw DataError("schema: duplicate column " + c.name);
        switch (c.role) {
            case ColumnRole::target:
                ++targets;
                if (c.kind != ColumnKind::continuous)
                    throw DataError("schema: target column " + c.name + " must be continuous");
                break;
            case ColumnRole::cluster:
                ++clusters;
                if (c.kind != ColumnKind::discrete)
                    throw DataError("schema: cluster column " + c.name + " must be discrete");
                break;
            case ColumnRole::group_key:
                if (c.kind != ColumnKind::discrete)
                    throw DataError("schema: group key " + c.name + " must be discrete");
                break;
            default:
                break;
        }
    }
    if (targets != 1) throw DataError("schema: exactly one target column required");
    if (clusters > 1) throw DataError("schema: at most one cluster column allowed");
}

std::optional<std::size_t> Schema::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < columns_.size(); ++i)
        if (columns_[i].name == name) return i;
    return std::nullopt;
}

const ColumnSpec& Schema::at(std::string_view name) const {
    auto i = index_of(name);
    if (!i) throw DataError("unknown column: " + std::string(name));
    return columns_[*i];
}

const ColumnSpec& Schema::target() const {
    for (const auto& c : columns_)
        if (c.role == ColumnRole::target) return c;
    throw DataError("schema has no target column");
}

std::vector<std::string> Schema::names_with_role(ColumnRole role) const {
    std::vector<std::string> out;
    for (const auto& c : columns_)
        if (c.role == role) out.push_back(c.name);
    return out;
}

std::optional<std::string> Schema::cluster_column() const {
    for (const auto& c : columns_)
        if (c.role == ColumnRole::cluster) return c.name;
    return std::nullopt;
}

Schema Schema::with_column(ColumnSpec spec) const {
    auto cols = columns_;
    if (auto i = index_of(spec.name)) {
        cols[*i] = std::move(spec);
    } else {
        cols.push_back(std::move(spec));
    }
    return Schema(std::move(cols));
}

Schema Schema::without_column(std::string_view name) const {
    auto cols = columns_;
    std::erase_if(cols, [&](const ColumnSpec& c) { return c.name == name; });
    return Schema(std::move(cols));
}

Schema Schema::from_json(const nlohmann::json& j) {
    const nlohmann::json& arr = j.is_object() && j.contains("columns") ? j.at("columns") : j;
    if (!arr.is_array()) throw DataError("schema: expected an array of {name, kind, role}");
    std::vector<ColumnSpec> cols;
    for (const auto& e : arr) {
        try {
            cols.push_back({e.at("name").get<std::string>(),
                            parse_kind(e.at("kind").get<std::string>()),
                            parse_role(e.at("role").get<std::string>())});
        } catch (const nlohmann::json::exception& ex) {
            throw DataError(std::string("schema: malformed entry: ") + ex.what());
        }
    }
    return Schema(std::move(cols));
}

nlohmann::json Schema::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& c : columns_)
        arr.push_back({{"name", c.name},
                       {"kind", std::string(to_string(c.kind))},
                       {"role", std::string(to_string(c.role))}});
    return arr;
}

Schema load_schema(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open schema file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& ex) {
        throw DataError("schema " + path + ": " + ex.what());
    }
    return Schema::from_json(j);
}

// ---------------------------------------------------------------- Column

std::vector<std::string> sorted_levels(std::vector<std::string> labels) {
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    const bool numeric = std::all_of(labels.begin(), labels.end(), [](const std::string& s) {
        return csv::parse_double(s).has_value();
    });
    if (numeric) {
        std::stable_sort(labels.begin(), labels.end(), [](const std::string& a, const std::string& b) {
            return *csv::parse_double(a) < *csv::parse_double(b);
        });
    }
    return labels;
}

Column Column::continuous(ColumnSpec spec, std::vector<double> values) {
    if (spec.kind != ColumnKind::continuous)
        throw DataError("column " + spec.name + " is not continuous");
    Column c;
    c.spec = std::move(spec);
    c.values = std::move(values);
    return c;
}

Column Column::discrete(ColumnSpec spec, const std::vector<std::string>& labels) {
    if (spec.kind != ColumnKind::discrete)
        throw DataError("column " + spec.name + " is not discrete");
    Column c;
    c.spec = std::move(spec);
    c.levels = sorted_levels(labels);
    if (c.levels.size() > kMaxLevels)
        throw DataError("discrete column " + c.spec.name + " has " +
                        std::to_string(c.levels.size()) +
                        " levels (limit 10000); is it really continuous?");
    std::map<std::string, int> index;
    for (std::size_t i = 0; i < c.levels.size(); ++i) index[c.levels[i]] = static_cast<int>(i);
    c.codes.reserve(labels.size());
    for (const auto& l : labels) c.codes.push_back(index.at(l));
    return c;
}

Column Column::discrete_coded(ColumnSpec spec, std::vector<int> codes,
                              std::vector<std::string> levels) {
    if (spec.kind != ColumnKind::discrete)
        throw DataError("column " + spec.name + " is not discrete");
    for (int code : codes)
        if (code < 0 || static_cast<std::size_t>(code) >= levels.size())
            throw DataError("column " + spec.name + ": level code out of range");
    Column c;
    c.spec = std::move(spec);
    c.codes = std::move(codes);
    c.levels = std::move(levels);
    return c;
}

// ---------------------------------------------------------------- Dataset

Dataset::Dataset(Schema schema, std::vector<Column> columns)
    : schema_(std::move(schema)), columns_(std::move(columns)) {
    if (columns_.size() != schema_.size())
        throw DataError("dataset: column count does not match schema");
    for (std::size_t i = 0; i < columns_.size(); ++i)
        if (!(columns_[i].spec == schema_.columns()[i]))
            throw DataError("dataset: column " + columns_[i].spec.name + " does not match schema");
    n_ = columns_.empty() ? 0 : columns_.front().size();
    if (n_ == 0) throw DataError("dataset: no rows");
    for (const auto& c : columns_) {
        if (c.size() != n_) throw DataError("dataset: column " + c.spec.name + " has wrong length");
        if (c.spec.kind == ColumnKind::discrete) {
            for (int code : c.codes)
                if (code < 0 || static_cast<std::size_t>(code) >= c.levels.size())
                    throw DataError("dataset: column " + c.spec.name + " has an undeclared level");
        }
    }
}

const Column& Dataset::column(std::string_view name) const {
    auto i = schema_.index_of(name);
    if (!i) throw DataError("dataset has no column " + std::string(name));
    return columns_[*i];
}

std::span<const double> Dataset::continuous(std::string_view name) const {
    const Column& c = column(name);
    if (c.spec.kind != ColumnKind::continuous)
        throw DataError("column " + c.spec.name + " is not continuous");
    return c.values;
}

Dataset Dataset::select_rows(std::span<const std::size_t> rows) const {
    std::vector<Column> cols;
    cols.reserve(columns_.size());
    for (const auto& c : columns_) {
        Column out;
        out.spec = c.spec;
        out.levels = c.levels;
        if (c.spec.kind == ColumnKind::continuous) {
            out.values.reserve(rows.size());
            for (auto r : rows) out.values.push_back(c.values.at(r));
        } else {
            out.codes.reserve(rows.size());
            for (auto r : rows) out.codes.push_back(c.codes.at(r));
        }
        cols.push_back(std::move(out));
    }
    return Dataset(schema_, std::move(cols));
}

Dataset Dataset::with_column(Column column) const {
    auto cols = columns_;
    Schema schema = schema_.with_column(column.spec);
    if (auto i = schema_.index_of(column.spec.name)) {
        cols[*i] = std::move(column);
    } else {
        cols.push_back(std::move(column));
    }
    return Dataset(std::move(schema), std::move(cols));
}

Dataset Dataset::without_column(std::string_view name) const {
    auto cols = columns_;
    std::erase_if(cols, [&](const Column& c) { return c.spec.name == name; });
    return Dataset(schema_.without_column(name), std::move(cols));
}

GroupKey Dataset::group_key(std::size_t row) const {
    GroupKey key;
    for (const auto& c : columns_)
        if (c.spec.role == ColumnRole::group_key) key.push_back(c.label(row));
    return key;
}

Groups Dataset::groups() const {
    std::map<GroupKey, std::vector<std::size_t>> by_key;
    for (std::size_t r = 0; r < n_; ++r) by_key[group_key(r)].push_back(r);
    Groups g;
    g.row_group.assign(n_, 0);
    for (auto& [key, rows] : by_key) {
        for (auto r : rows) g.row_group[r] = g.keys.size();
        g.keys.push_back(key);
        g.rows.push_back(std::move(rows));
    }
    return g;
}

// ---------------------------------------------------------------- CSV I/O

LoadResult read_csv(std::istream& in, const Schema& schema) {
    auto table = csv::read(in);
    if (table.empty()) throw DataError("csv: empty file");
    const auto& header = table.front();

    std::set<std::string> header_set(header.begin(), header.end());
    if (header_set.size() != header.size()) throw DataError("csv: duplicate header names");

    Schema effective = schema;
    if (auto cl = schema.cluster_column(); cl && !header_set.count(*cl))
        effective = schema.without_column(*cl);

    std::vector<std::string> missing, extra;
    for (const auto& c : effective.columns())
        if (!header_set.count(c.name)) missing.push_back(c.name);
    for (const auto& h : header)
        if (!effective.index_of(h)) extra.push_back(h);
    if (!missing.empty() || !extra.empty()) {
        std::string msg = "header/schema mismatch";
        if (!missing.empty()) msg += "; missing from data: [" + join(missing) + "]";
        if (!extra.empty()) msg += "; not in schema: [" + join(extra) + "]";
        throw DataError(msg);
    }

    const std::size_t k = effective.size();
    std::vector<std::size_t> source(k);
    for (std::size_t i = 0; i < k; ++i)
        source[i] = static_cast<std::size_t>(
            std::find(header.begin(), header.end(), effective.columns()[i].name) - header.begin());

    std::vector<std::vector<double>> reals(k);
    std::vector<std::vector<std::string>> labels(k);
    std::size_t dropped = 0;
    std::vector<double> row_real(k);
    for (std::size_t r = 1; r < table.size(); ++r) {
        const auto& row = table[r];
        bool ok = row.size() == header.size();
        for (std::size_t i = 0; ok && i < k; ++i) {
            const std::string& cell = row[source[i]];
            if (is_missing(cell)) {
                ok = false;
            } else if (effective.columns()[i].kind == ColumnKind::continuous) {
                auto v = csv::parse_double(cell);
                if (!v || !std::isfinite(*v)) ok = false;
                else row_real[i] = *v;
            }
        }
        if (!ok) {
            ++dropped;
            continue;
        }
        for (std::size_t i = 0; i < k; ++i) {
            if (effective.columns()[i].kind == ColumnKind::continuous)
                reals[i].push_back(row_real[i]);
            else
                labels[i].push_back(row[source[i]]);
        }
    }

    std::vector<Column> cols;
    cols.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        const auto& spec = effective.columns()[i];
        if (spec.kind == ColumnKind::continuous)
            cols.push_back(Column::continuous(spec, std::move(reals[i])));
        else
            cols.push_back(Column::discrete(spec, labels[i]));
    }
    return {Dataset(std::move(effective), std::move(cols)), dropped};
}

LoadResult load_csv(const std::string& path, const Schema& schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open data file: " + path);
    return read_csv(in, schema);
}

void write_csv(std::ostream& out, const Dataset& ds) {
    csv::Row row;
    for (const auto& c : ds.schema().columns()) row.push_back(c.name);
    csv::write_row(out, row);
    for (std::size_t r = 0; r < ds.n_rows(); ++r) {
        row.clear();
        for (const auto& c : ds.columns()) {
            if (c.spec.kind == ColumnKind::continuous)
                row.push_back(csv::format_double(c.values[r]));
            else
                row.push_back(c.label(r));
        }
        csv::write_row(out, row);
    }
}

void save_csv(const std::string& path, const Dataset& ds) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path);
    write_csv(out, ds);
}

}  // namespace hbnet::data
