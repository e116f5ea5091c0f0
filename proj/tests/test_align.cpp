#include <doctest.h>

#include "latecomer/align.hpp"
#include "latecomer/errors.hpp"

#include "support.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <random>

using namespace latecomer;
using latecomer::testing::fixture_path;
using latecomer::testing::read_file;

namespace {

CountrySeries make_series(const std::string &name, const std::string &first, std::vector<std::int64_t> counts) {
    CountrySeries s;
    s.name = name;
    const Date d0 = parse_iso_date(first);
    for (std::size_t i = 0; i < counts.size(); ++i)
        s.dates.push_back(add_days(d0, static_cast<int>(i)));
    s.counts = std::move(counts);
    return s;
}

// Series that reaches `threshold` on its first day and lasts `tau_days` days.
CountrySeries tau_series(const std::string &name, int tau_days, std::int64_t start = 100) {
    std::vector<std::int64_t> counts;
    for (int i = 0; i < tau_days; ++i)
        counts.push_back(start + 10 * i);
    return make_series(name, "2020-03-01", counts);
}

} // namespace

TEST_CASE("parse_jhu_wide sums province rows per country") {
    const std::string csv = "Province/State,Country/Region,Lat,Long,1/22/20,1/23/20\n"
                            "New South Wales,Australia,-33.8,151.2,1,2\n"
                            "Victoria,Australia,-37.8,144.9,3,4\n";
    const auto all = parse_jhu_wide(csv);
    REQUIRE(all.size() == 1);
    CHECK(all[0].name == "Australia");
    CHECK(all[0].counts == std::vector<std::int64_t>{4, 6});
    CHECK(format_iso(all[0].dates[0]) == "2020-01-22");
    CHECK(format_iso(all[0].dates[1]) == "2020-01-23");
}

TEST_CASE("parse_jhu_wide passes a single row through") {
    const std::string csv = "Province/State,Country/Region,Lat,Long,3/1/20,3/2/20,3/3/20\n"
                            ",Brazil,-14.2,-51.9,0,0,5\n";
    const auto all = parse_jhu_wide(csv);
    REQUIRE(all.size() == 1);
    CHECK(all[0].counts == std::vector<std::int64_t>{0, 0, 5});
}

TEST_CASE("parse_jhu_wide rejects a header without Country/Region") {
    const std::string csv = "Province/State,Lat,Long,3/1/20\n,1,2,3\n";
    try {
        parse_jhu_wide(csv);
        FAIL("expected FormatError");
    } catch (const FormatError &e) {
        CHECK(e.missing_column() == "Country/Region");
    }
}

TEST_CASE("parse_jhu_wide reports the location of a bad cell") {
    const std::string csv = "Province/State,Country/Region,Lat,Long,3/1/20,3/2/20\n"
                            ",Brazil,-14.2,-51.9,1,x\n";
    try {
        parse_jhu_wide(csv);
        FAIL("expected ParseError");
    } catch (const ParseError &e) {
        CHECK(e.row() == 2);
        CHECK(e.column() == 6);
    }
}

TEST_CASE("parse_jhu_wide handles quoted names and CRLF") {
    const std::string csv = "Province/State,Country/Region,Lat,Long,3/1/20\r\n"
                            ",\"Korea, South\",36.0,128.0,3736\r\n";
    const auto all = parse_jhu_wide(csv);
    REQUIRE(all.size() == 1);
    CHECK(all[0].name == "Korea, South");
    CHECK(all[0].counts[0] == 3736);
}

TEST_CASE("bundled snapshot parses") {
    const auto cases = parse_jhu_wide(read_file(fixture_path("jhu_confirmed_global_2020-04-15.csv")));
    const CountrySeries *brazil = find_country(cases, "Brazil");
    REQUIRE(brazil != nullptr);
    CHECK(format_iso(brazil->dates.front()) == "2020-01-22");
    CHECK(format_iso(brazil->dates.back()) == "2020-04-15");
    const TauSeries tau = to_tau(*brazil, 100);
    CHECK(format_iso(tau.start_date) == "2020-03-14");
    CHECK(std::is_sorted(cases.begin(), cases.end(),
                         [](const CountrySeries &a, const CountrySeries &b) { return a.name < b.name; }));
}

TEST_CASE("parse_long groups and sorts") {
    SUBCASE("three rows one country") {
        const auto all = parse_long("country,date,cumulative\nX,2020-03-01,1\nX,2020-03-02,2\nX,2020-03-03,4\n");
        REQUIRE(all.size() == 1);
        CHECK(all[0].size() == 3);
    }
    SUBCASE("row order does not matter") {
        const auto sorted = parse_long("country,date,cumulative\nX,2020-03-01,1\nX,2020-03-02,2\nX,2020-03-03,4\n");
        const auto shuffled =
            parse_long("country,date,cumulative\nX,2020-03-03,4\nX,2020-03-01,1\nX,2020-03-02,2\n");
        CHECK(sorted[0].dates == shuffled[0].dates);
        CHECK(sorted[0].counts == shuffled[0].counts);
    }
    SUBCASE("duplicate key") {
        CHECK_THROWS_AS(parse_long("country,date,cumulative\nX,2020-03-01,1\nX,2020-03-01,2\n"), DataError);
    }
    SUBCASE("date gap") {
        CHECK_THROWS_AS(parse_long("country,date,cumulative\nX,2020-03-01,1\nX,2020-03-03,2\n"), DataError);
    }
    SUBCASE("negative count") {
        CHECK_THROWS_AS(parse_long("country,date,cumulative\nX,2020-03-01,-1\n"), DataError);
    }
}

TEST_CASE("revisions are reported, not removed") {
    const auto s = make_series("X", "2020-03-01", {100, 120, 115, 130});
    const auto revs = find_revisions(s);
    REQUIRE(revs.size() == 1);
    CHECK(format_iso(revs[0].date) == "2020-03-03");
    CHECK(revs[0].previous == 120);
    CHECK(revs[0].current == 115);
    CHECK(to_tau(s, 100).log_counts.size() == 4);
}

TEST_CASE("to_tau examples") {
    SUBCASE("exact hit") {
        const auto t = to_tau(make_series("X", "2020-03-01", {50, 90, 100, 130}), 100);
        REQUIRE(t.log_counts.size() == 2);
        CHECK(t.log_counts[0] == std::log(100.0));
        CHECK(t.log_counts[1] == std::log(130.0));
        CHECK(format_iso(t.start_date) == "2020-03-03");
    }
    SUBCASE("already above") {
        const auto t = to_tau(make_series("X", "2020-03-01", {150}), 100);
        REQUIRE(t.log_counts.size() == 1);
        CHECK(t.log_counts[0] == std::log(150.0));
    }
    SUBCASE("never reached") {
        try {
            to_tau(make_series("X", "2020-03-01", {99}), 100);
            FAIL("expected NotLatecomerError");
        } catch (const NotLatecomerError &e) {
            CHECK(e.max_count() == 99);
            CHECK(std::string(e.what()).find("not yet a latecomer") != std::string::npos);
        }
    }
    SUBCASE("zero after the start is a data error") {
        CHECK_THROWS_AS(to_tau(make_series("X", "2020-03-01", {100, 0}), 100), DataError);
    }
}

TEST_CASE("to_tau is shift-equivariant") {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> step(0, 40);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::int64_t> counts{100};
        for (int i = 0; i < 15; ++i)
            counts.push_back(counts.back() + step(rng));
        const auto base = make_series("X", "2020-03-10", counts);
        const auto t0 = to_tau(base, 100);

        const int lead = 1 + trial;
        std::vector<std::int64_t> longer(static_cast<std::size_t>(lead), 0);
        for (int i = 0; i < lead; ++i)
            longer[static_cast<std::size_t>(i)] = i * 99 / lead;
        longer.insert(longer.end(), counts.begin(), counts.end());
        const auto shifted = make_series("X", format_iso(add_days(parse_iso_date("2020-03-10"), -lead)), longer);
        const auto t1 = to_tau(shifted, 100);
        CHECK(t1.log_counts == t0.log_counts);
        CHECK(t1.start_date == t0.start_date);
    }
}

TEST_CASE("inflation weights") {
    auto as_vec = [](const Eigen::VectorXd &v) { return std::vector<double>(v.data(), v.data() + v.size()); };
    CHECK(as_vec(inflation_weights(6)) == std::vector<double>{1, 1, 1, 2, 3, 4});
    CHECK(as_vec(inflation_weights(4)) == std::vector<double>{1, 2, 3, 4});
    CHECK(as_vec(inflation_weights(2)) == std::vector<double>{3, 4});
    CHECK(as_vec(inflation_weights(1)) == std::vector<double>{4});
    const Eigen::VectorXd w = inflation_weights(21);
    CHECK(w.minCoeff() >= 1.0);
    for (Eigen::Index i = 1; i < w.size(); ++i)
        CHECK(w(i) >= w(i - 1));
}

TEST_CASE("weighted least squares equals least squares on duplicated rows") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        const int k = 6 + trial;
        const Eigen::MatrixXd x = latecomer::testing::normal_matrix(rng, k, 3);
        const Eigen::VectorXd y = latecomer::testing::normals(rng, k);
        const Eigen::VectorXd w = inflation_weights(k);

        const Eigen::MatrixXd xtwx = x.transpose() * w.asDiagonal() * x;
        const Eigen::VectorXd weighted = xtwx.ldlt().solve(x.transpose() * w.asDiagonal() * y);

        const int rows = static_cast<int>(w.sum());
        Eigen::MatrixXd xd(rows, 3);
        Eigen::VectorXd yd(rows);
        int r = 0;
        for (int i = 0; i < k; ++i)
            for (int c = 0; c < static_cast<int>(w(i)); ++c, ++r) {
                xd.row(r) = x.row(i);
                yd(r) = y(i);
            }
        const Eigen::VectorXd duplicated = xd.colPivHouseholderQr().solve(yd);
        CHECK((weighted - duplicated).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("build_panel drops peers that are too short") {
    const auto target = tau_series("T", 21);
    const auto build = build_panel(target, {tau_series("A", 40), tau_series("B", 22)}, 100, 14, 21);
    CHECK(build.panel.peer_names == std::vector<std::string>{"A"});
    REQUIRE(build.dropped.size() == 1);
    CHECK(build.dropped[0].peer == "B");
    CHECK(build.dropped[0].reason == "too_short");
    CHECK(build.dropped[0].len == 22);
    CHECK(build.dropped[0].required == 35);
    CHECK(build.panel.x.rows() == 35);
    CHECK(build.panel.tau_len == 21);
    CHECK(build.panel.window == 21);
}

TEST_CASE("build_panel shrinks the window with a warning") {
    const auto build = build_panel(tau_series("T", 10), {tau_series("A", 40)}, 100, 14, 21);
    CHECK(build.panel.window == 10);
    CHECK_FALSE(build.warnings.empty());
    CHECK(build.panel.window_weights().size() == 10);
    CHECK(build.panel.window_weights()(9) == 4.0);
}

TEST_CASE("build_panel fails when no peer survives") {
    CHECK_THROWS_AS(build_panel(tau_series("T", 21), {tau_series("A", 22), tau_series("B", 30)}, 100, 14, 21),
                    DataError);
}

TEST_CASE("build_panel round-trips raw counts and is order independent") {
    const auto target = tau_series("T", 12, 130);
    const auto a = tau_series("A", 30, 100);
    auto b = tau_series("B", 28, 250);
    b.counts.insert(b.counts.begin(), {5, 40});
    b.dates.insert(b.dates.begin(), {add_days(b.dates.front(), -2), add_days(b.dates.front(), -1)});
    const auto one = build_panel(target, {a, b}, 100, 5, 21).panel;
    const auto two = build_panel(target, {b, a}, 100, 5, 21).panel;
    CHECK(one.peer_names == two.peer_names);
    CHECK(one.x == two.x);
    CHECK(std::exp(one.y(0)) >= 100.0);
    for (int j = 0; j < one.peers(); ++j)
        for (int tau = 1; tau <= one.x.rows(); ++tau) {
            const CountrySeries &src = one.peer_names[static_cast<std::size_t>(j)] == "A" ? a : b;
            const auto raw = src.count_on(one.peer_date(j, tau));
            REQUIRE(raw.has_value());
            CHECK(one.x(tau - 1, j) == std::log(static_cast<double>(*raw)));
        }
}

TEST_CASE("drop log is one JSON object per line") {
    DropRecord r{"Chile", "too_short", 12, 35};
    const auto line = r.to_json_line();
    CHECK(line.find('\n') == std::string::npos);
    const auto j = nlohmann::json::parse(line);
    CHECK(j["peer"] == "Chile");
    CHECK(j["reason"] == "too_short");
    CHECK(j["len"] == 12);
    CHECK(j["required"] == 35);
}
