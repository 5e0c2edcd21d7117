#include <cmath>
#include <set>
#include <sstream>

#include <doctest.h>

#include "helpers.hpp"
#include "hbnet/csv.hpp"
#include "hbnet/data.hpp"
#include "hbnet/error.hpp"
#include "hbnet/weather.hpp"

using namespace hbnet;
using namespace testing;

namespace {

data::Schema small_schema() {
    return data::Schema({{"site", ColumnKind::discrete, ColumnRole::group_key},
                         {"x", ColumnKind::continuous, ColumnRole::weather},
                         {"y", ColumnKind::continuous, ColumnRole::target}});
}

data::Dataset grouped(const std::vector<std::size_t>& sizes) {
    std::vector<std::string> g;
    std::vector<double> x, y;
    for (std::size_t k = 0; k < sizes.size(); ++k)
        for (std::size_t i = 0; i < sizes[k]; ++i) {
            g.push_back("g" + std::to_string(k));
            x.push_back(static_cast<double>(x.size()));
            y.push_back(1.0 + static_cast<double>(k));
        }
    return make_dataset({disc("site", g), cont("x", x, ColumnRole::weather), cont("y", y, ColumnRole::target)});
}

}  // namespace

TEST_CASE("csv reader handles quotes and CRLF") {
    std::istringstream in("a,b\r\n\"x,1\",\"say \"\"hi\"\"\"\r\n");
    auto rows = csv::read(in);
    REQUIRE(rows.size() == 2);
    CHECK(rows[1][0] == "x,1");
    CHECK(rows[1][1] == "say \"hi\"");
    std::ostringstream out;
    csv::write_row(out, rows[1]);
    std::istringstream back(out.str());
    CHECK(csv::read(back)[0] == rows[1]);
}

TEST_CASE("format_double round-trips") {
    for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 12345678.9, 0.0})
        CHECK(*csv::parse_double(csv::format_double(x)) == x);
    CHECK_FALSE(csv::parse_double("1.5x"));
    CHECK_FALSE(csv::parse_double(""));
}

TEST_CASE("schema invariants") {
    CHECK_THROWS_AS(data::Schema({{"y", ColumnKind::discrete, ColumnRole::target}}), DataError);
    CHECK_THROWS_AS(data::Schema({{"x", ColumnKind::continuous, ColumnRole::weather}}), DataError);
    CHECK_THROWS_AS(data::Schema({{"y", ColumnKind::continuous, ColumnRole::target},
                                  {"c", ColumnKind::continuous, ColumnRole::cluster}}),
                    DataError);
    CHECK_THROWS_AS(data::Schema({{"y", ColumnKind::continuous, ColumnRole::target},
                                  {"y", ColumnKind::continuous, ColumnRole::weather}}),
                    DataError);
    const auto s = small_schema();
    CHECK(data::Schema::from_json(s.to_json()) == s);
}

TEST_CASE("load_csv drops incomplete rows") {
    std::istringstream in("site,x,y\na,1,2\nb,,3\nc,2,4\n");
    auto res = data::read_csv(in, small_schema());
    CHECK(res.dataset.n_rows() == 2);
    CHECK(res.dropped == 1);
}

TEST_CASE("load_csv drops unparseable numbers") {
    std::istringstream in("site,x,y\na,1,2\nb,abc,3\n");
    CHECK(data::read_csv(in, small_schema()).dropped == 1);
}

TEST_CASE("load_csv normalises column order") {
    std::istringstream a("site,x,y\na,1,2\nb,3,4\n");
    std::istringstream b("y,site,x\n2,a,1\n4,b,3\n");
    CHECK(data::read_csv(a, small_schema()).dataset == data::read_csv(b, small_schema()).dataset);
}

TEST_CASE("load_csv rejects header mismatch") {
    std::istringstream in("site,x,z\na,1,2\n");
    try {
        data::read_csv(in, small_schema());
        FAIL("expected an error");
    } catch (const DataError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("y") != std::string::npos);
        CHECK(msg.find("z") != std::string::npos);
    }
}

TEST_CASE("load_csv rejects missing file and too many levels") {
    CHECK_THROWS_AS(data::load_csv("/nonexistent/file.csv", small_schema()), DataError);
    std::ostringstream text;
    text << "site,x,y\n";
    for (int i = 0; i < 10001; ++i) text << "s" << i << ",1,2\n";
    std::istringstream in(text.str());
    CHECK_THROWS_AS(data::read_csv(in, small_schema()), DataError);
}

TEST_CASE("absent cluster column is dropped from the schema") {
    auto s = small_schema().with_column({"F", ColumnKind::discrete, ColumnRole::cluster});
    std::istringstream in("site,x,y\na,1,2\n");
    auto ds = data::read_csv(in, s).dataset;
    CHECK_FALSE(ds.has_column("F"));
}

TEST_CASE("load, save, load is idempotent") {
    std::istringstream in("site,x,y\nb,0.1,2\na,1e-7,3.25\nb,-4,1\n");
    auto first = data::read_csv(in, small_schema()).dataset;
    std::ostringstream out;
    data::write_csv(out, first);
    std::istringstream again(out.str());
    auto second = data::read_csv(again, small_schema()).dataset;
    CHECK(first == second);
    std::ostringstream out2;
    data::write_csv(out2, second);
    CHECK(out.str() == out2.str());
}

TEST_CASE("group keys order lexicographically") {
    auto ds = make_dataset({disc("site", {"b", "a", "b", "c"}), disc("var", {"2", "1", "1", "1"}),
                            cont("y", {1, 2, 3, 4}, ColumnRole::target)});
    auto g = ds.groups();
    REQUIRE(g.keys.size() == 4);
    CHECK(g.keys[0] == data::GroupKey{"a", "1"});
    CHECK(g.keys[1] == data::GroupKey{"b", "1"});
    CHECK(g.keys[2] == data::GroupKey{"b", "2"});
    CHECK(g.row_group[0] == 2);
}

TEST_CASE("jitter") {
    auto ds = grouped({3, 4});
    const std::vector<std::string> cols{"x"};
    CHECK(data::jitter(ds, cols, 0.0, 5) == ds);
    CHECK(data::jitter(ds, cols, 0.1, 5) == data::jitter(ds, cols, 0.1, 5));
    CHECK_FALSE(data::jitter(ds, cols, 0.1, 5) == data::jitter(ds, cols, 0.1, 6));
    auto j = data::jitter(ds, cols, 0.1, 5);
    CHECK(j.column("y") == ds.column("y"));
    const std::vector<std::string> bad{"site"};
    CHECK_THROWS_AS(data::jitter(ds, bad, 0.1, 5), DataError);
}

TEST_CASE("jitter keeps the mean within the CLT bound") {
    std::vector<double> v(100000, 3.0);
    std::vector<std::string> g(v.size(), "a");
    auto ds = make_dataset({disc("site", g), cont("y", v, ColumnRole::target)});
    const std::vector<std::string> cols{"y"};
    auto j = data::jitter(ds, cols, 0.1, 11);
    double m = 0.0;
    for (double x : j.continuous("y")) m += x;
    m /= static_cast<double>(v.size());
    CHECK(std::fabs(m - 3.0) < 3.0 * 0.1 / std::sqrt(1e5));
}

TEST_CASE("holdout_split samples round(fraction * G) groups") {
    auto ds = grouped(std::vector<std::size_t>(10, 3));
    auto s = data::holdout_split(ds, 0.2, 1);
    CHECK(s.test_groups.size() == 2);
    CHECK(s.test.n_rows() == 6);
    auto again = data::holdout_split(ds, 0.2, 1);
    CHECK(again.test_rows == s.test_rows);
    CHECK(data::holdout_split(grouped(std::vector<std::size_t>(5, 1)), 0.5, 3).test_groups.size() == 3);
}

TEST_CASE("holdout_split on unequal groups takes whole groups") {
    const std::vector<std::size_t> sizes{1, 2, 3, 4, 5};
    auto ds = grouped(sizes);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto s = data::holdout_split(ds, 0.2, seed);
        REQUIRE(s.test_groups.size() == 1);
        // Brute force: the test rows are exactly the rows of the sampled group.
        const std::string g = s.test_groups[0][0];
        std::vector<std::size_t> expect;
        for (std::size_t r = 0; r < ds.n_rows(); ++r)
            if (ds.group_key(r)[0] == g) expect.push_back(r);
        CHECK(s.test_rows == expect);
        CHECK(s.test.n_rows() == sizes[static_cast<std::size_t>(g[1] - '0')]);
    }
}

TEST_CASE("holdout_split errors") {
    CHECK_THROWS_AS(data::holdout_split(grouped({5}), 0.2, 1), DataError);
    CHECK_THROWS_AS(data::holdout_split(grouped({2, 2}), 0.0, 1), DataError);
    CHECK_THROWS_AS(data::holdout_split(grouped({2, 2}), 1.0, 1), DataError);
}

TEST_CASE("property: holdout_split partitions rows and groups") {
    Rng rng(99);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<std::size_t> sizes(2 + rng.below(12));
        for (auto& s : sizes) s = 1 + rng.below(6);
        auto ds = grouped(sizes);
        const double fraction = 0.05 + 0.9 * rng.uniform();
        auto s = data::holdout_split(ds, fraction, rng.next_u64());
        std::vector<int> seen(ds.n_rows(), 0);
        for (auto r : s.train_rows) ++seen[r];
        for (auto r : s.test_rows) ++seen[r];
        for (int c : seen) CHECK(c == 1);
        std::set<data::GroupKey> train, test;
        for (auto r : s.train_rows) train.insert(ds.group_key(r));
        for (auto r : s.test_rows) test.insert(ds.group_key(r));
        for (const auto& k : test) CHECK(train.count(k) == 0);
        CHECK(s.train.n_rows() + s.test.n_rows() == ds.n_rows());
    }
}

TEST_CASE("weather aggregation") {
    std::vector<data::WeatherRecord> recs;
    // Two days in May with two readings each, one day in July.
    recs.push_back({"s", 2020, 5, 1, 10.0, 50.0});
    recs.push_back({"s", 2020, 5, 1, 20.0, 70.0});
    recs.push_back({"s", 2020, 5, 2, 12.0, 60.0});
    recs.push_back({"s", 2020, 5, 2, 16.0, 64.0});
    recs.push_back({"s", 2020, 7, 3, 30.0, 40.0});
    auto out = data::aggregate_weather(recs, data::default_periods());
    REQUIRE(out.size() == 1);
    CHECK(out[0].mean_temperature[0] == doctest::Approx(14.5));
    CHECK(out[0].temperature_range[0] == doctest::Approx((10.0 + 4.0) / 2));
    CHECK(out[0].mean_humidity[0] == doctest::Approx(61.0));
    CHECK(out[0].humidity_range[0] == doctest::Approx((20.0 + 4.0) / 2));
    CHECK(out[0].mean_temperature[1] == doctest::Approx(30.0));
    CHECK(out[0].temperature_range[1] == doctest::Approx(0.0));
    CHECK(std::isnan(out[0].mean_temperature[2]));
    const auto names = data::weather_column_names(3);
    REQUIRE(names.size() == 12);
    CHECK(names.front() == "T1");
    CHECK(names.back() == "RH6");
    CHECK(data::flatten(out[0]).size() == 12);
}
