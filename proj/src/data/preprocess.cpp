#include <cmath>

#include "hbnet/data.hpp"
#include "hbnet/error.hpp"
#include "hbnet/rng.hpp"

namespace hbnet::data {

Dataset jitter(const Dataset& ds, std::span<const std::string> columns, double sd,
               std::uint64_t seed) {
    if (!(sd >= 0.0) || !std::isfinite(sd)) throw DataError("jitter: sd must be non-negative");
    Dataset out = ds;
    for (std::size_t k = 0; k < columns.size(); ++k) {
        const Column& src = ds.column(columns[k]);
        if (src.spec.kind != ColumnKind::continuous)
            throw DataError("jitter: column " + src.spec.name + " is not continuous");
        if (sd == 0.0) continue;
        // One stream per named column so the noise of a column does not
        // depend on which other columns are jittered alongside it.
        Rng rng(derive_seed(seed, stable_hash(src.spec.name)));
        Column c = src;
        for (double& v : c.values) v += sd * rng.normal();
        out = out.with_column(std::move(c));
    }
    return out;
}

Split holdout_split(const Dataset& ds, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0))
        throw DataError("holdout_split: fraction must lie in (0, 1)");
    if (ds.schema().names_with_role(ColumnRole::group_key).empty())
        throw DataError("holdout_split: dataset has no group_key column");
    Groups g = ds.groups();
    const std::size_t n_groups = g.keys.size();
    if (n_groups < 2) throw DataError("holdout_split: need at least 2 distinct groups");

    auto n_test = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n_groups) + 0.5));
    n_test = std::clamp<std::size_t>(n_test, 1, n_groups - 1);

    std::vector<std::size_t> order(n_groups);
    for (std::size_t i = 0; i < n_groups; ++i) order[i] = i;
    Rng rng(seed);
    rng.shuffle(order);

    std::vector<char> in_test(n_groups, 0);
    for (std::size_t i = 0; i < n_test; ++i) in_test[order[i]] = 1;

    Split s{ds, ds, {}, {}, {}};
    for (std::size_t r = 0; r < ds.n_rows(); ++r)
        (in_test[g.row_group[r]] ? s.test_rows : s.train_rows).push_back(r);
    for (std::size_t i = 0; i < n_groups; ++i)
        if (in_test[i]) s.test_groups.push_back(g.keys[i]);
    s.train = ds.select_rows(s.train_rows);
    s.test = ds.select_rows(s.test_rows);
    return s;
}

}  // namespace hbnet::data
