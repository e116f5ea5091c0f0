#include <doctest.h>

#include "latecomer/cli.hpp"
#include "latecomer/serialize.hpp"

#include "support.hpp"

#include <json.hpp>

#include <filesystem>
#include <sstream>

using namespace latecomer;
using latecomer::testing::fixture_path;
using latecomer::testing::read_file;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "latecomer");
    std::vector<const char *> argv;
    for (const auto &a : args)
        argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

const std::string cases_csv = fixture_path("jhu_confirmed_global_2020-04-15.csv");
const std::string deaths_csv = fixture_path("jhu_deaths_global_2020-04-15.csv");
const std::string synthetic_csv = fixture_path("synthetic_ecm_long.csv");

std::vector<std::string> brazil_forecast(std::vector<std::string> extra = {}) {
    std::vector<std::string> a{"forecast", "--data-path", cases_csv, "--target", "Brazil", "--seed", "7",
                               "--n-sims", "2000"};
    a.insert(a.end(), extra.begin(), extra.end());
    return a;
}

std::vector<std::string> lines_of(const std::string &text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);)
        out.push_back(line);
    return out;
}

std::filesystem::path scratch_dir(const std::string &stem) {
    const auto dir = std::filesystem::temp_directory_path() / ("latecomer_" + stem);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace

TEST_CASE("forecast table for Brazil") {
    const Result r = run_cli(brazil_forecast());
    REQUIRE(r.code == 0);
    const auto lines = lines_of(r.out);
    REQUIRE(lines.size() == 15u);
    CHECK(lines[0] == "Date,Total,New,GrowthRatePct,Lower,Upper");
    CHECK(lines[1].rfind("2020-04-16,", 0) == 0);
    CHECK(lines[14].rfind("2020-04-29,", 0) == 0);
}

TEST_CASE("forecast sidecar names the selected peers") {
    const auto dir = scratch_dir("sidecar");
    const std::string out = (dir / "brazil.csv").string();
    REQUIRE(run_cli(brazil_forecast({"--output", out})).code == 0);
    const auto fit = nlohmann::json::parse(read_file(out + ".fit.json"));
    REQUIRE(fit.contains("selected_peers"));
    CHECK(fit["selected_peers"].size() >= 1u);
    for (const auto &name : fit["selected_peers"])
        CHECK(name.is_string());
    CHECK(fit.contains("lambda"));
    CHECK(fit.contains("bic"));
    CHECK(fit.contains("gamma"));
    CHECK(fit.contains("alpha"));
}

TEST_CASE("H=1 gives a single row") {
    const Result r = run_cli(brazil_forecast({"-H", "1"}));
    REQUIRE(r.code == 0);
    CHECK(lines_of(r.out).size() == 2u);
}

TEST_CASE("a target below the threshold exits with a data error") {
    const Result r = run_cli(brazil_forecast({"--threshold", "100000000"}));
    CHECK(r.code == 2);
    const auto j = nlohmann::json::parse(r.err);
    CHECK(j["exit_code"] == 2);
    CHECK(j["message"].get<std::string>().find("not yet a latecomer") != std::string::npos);
}

TEST_CASE("a missing data file exits with a data error") {
    const Result r = run_cli({"forecast", "--data-path", "/nonexistent/x.csv", "--target", "Brazil", "--seed", "1"});
    CHECK(r.code == 2);
    CHECK(nlohmann::json::parse(r.err)["error"] == "data_error");
}

TEST_CASE("bad arguments exit with code 4") {
    CHECK(run_cli({"forecast", "--data-path", cases_csv, "--target", "Brazil"}).code == 4);
    CHECK(run_cli(brazil_forecast({"-H", "0"})).code == 4);
    CHECK(run_cli(brazil_forecast({"--confidence", "1.5"})).code == 4);
    CHECK(run_cli(brazil_forecast({"--format", "xml"})).code == 4);
    CHECK(run_cli({"nonsense"}).code == 4);
}

TEST_CASE("JSON forecast round-trips to the in-memory path") {
    const Result r = run_cli(brazil_forecast({"--format", "json"}));
    REQUIRE(r.code == 0);
    const ForecastPath parsed = forecast_path_from_json(nlohmann::ordered_json::parse(r.out));

    cli::RunConfig c;
    c.command = "forecast";
    c.data_path = cases_csv;
    c.target = "Brazil";
    c.seed = 7;
    c.n_sims = 2000;
    const ForecastPath direct = cli::forecast_pipeline(c).path;
    CHECK(parsed == direct);
}

TEST_CASE("repeat runs produce identical bytes") {
    const auto dir = scratch_dir("repeat");
    for (const char *fmt : {"csv", "json"}) {
        const std::string a = (dir / (std::string("a.") + fmt)).string();
        const std::string b = (dir / (std::string("b.") + fmt)).string();
        REQUIRE(run_cli(brazil_forecast({"--format", fmt, "--output", a})).code == 0);
        REQUIRE(run_cli(brazil_forecast({"--format", fmt, "--output", b})).code == 0);
        CHECK(read_file(a) == read_file(b));
        CHECK(read_file(a + ".fit.json") == read_file(b + ".fit.json"));
    }
}

TEST_CASE("ingest-check reports every country") {
    const Result r = run_cli({"ingest-check", "--data-path", cases_csv});
    REQUIRE(r.code == 0);
    int countries = 0;
    for (const auto &line : lines_of(r.out)) {
        const auto j = nlohmann::json::parse(line);
        if (j.contains("country") && !j.contains("warning"))
            ++countries;
        if (j.value("country", "") == "Brazil" && !j.contains("warning"))
            CHECK(j["tau_start"] == "2020-03-14");
    }
    CHECK(countries == 11);
}

TEST_CASE("backtest on the bundled snapshot mirrors the table layout") {
    const Result r = run_cli({"backtest", "--data-path", cases_csv, "--target", "Brazil", "--seed", "7", "--n-sims",
                              "1000", "--origin-start", "2020-04-04", "--origin-end", "2020-04-14"});
    REQUIRE(r.code == 0);
    const auto lines = lines_of(r.out);
    const auto header = lines.front();
    const auto columns = std::count(header.begin(), header.end(), ',') + 1;
    CHECK(columns - 2 <= 12);
    CHECK(columns - 2 == 11);
    CHECK(header.rfind("Date,Observed,2020-04-04,", 0) == 0);
}

TEST_CASE("backtest JSON score equals the library score") {
    const Result r = run_cli({"backtest", "--data-path", synthetic_csv, "--data-format", "long", "--target", "Target",
                              "--seed", "3", "--n-sims", "1000", "--format", "json"});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);

    const auto all = cli::load_series(synthetic_csv, "long");
    std::vector<CountrySeries> peers;
    for (const auto &s : all)
        if (s.name != "Target")
            peers.push_back(s);
    BacktestConfig cfg;
    cfg.n_sims = 1000;
    cfg.seed = 3;
    const BacktestReport report = run_backtest(*find_country(all, "Target"), peers, cfg);
    REQUIRE(report.score.has_value());
    CHECK(std::abs(j["score"]["mape_total"].get<double>() - report.score->mape_total) < 1e-12);
}

TEST_CASE("backtest with a bad path exits 2") {
    CHECK(run_cli({"backtest", "--data-path", "/nonexistent.csv", "--target", "Brazil", "--seed", "1"}).code == 2);
}

TEST_CASE("combined report") {
    const std::vector<std::string> base{"report",     "--data-path", cases_csv, "--deaths-path", deaths_csv,
                                        "--target",   "Brazil",      "--seed",  "7",             "--n-sims",
                                        "2000",       "--as-of",     "2020-04-08"};
    const Result r = run_cli(base);
    REQUIRE(r.code == 0);
    const auto lines = lines_of(r.out);
    CHECK(lines.front() == "Date,Source,CasesTotal,CasesNew,CasesGrowthRate,CasesObserved,"
                           "DeathsTotal,DeathsNew,DeathsGrowthRate,DeathsObserved");
    const std::string ci = lines.back();
    CHECK(ci.rfind("CI(95%) on 2020-04-22,interval,[-", 0) == 0);

    // Forecast rows for dates inside the snapshot carry the realised count.
    bool saw_observed_forecast = false;
    for (const auto &line : lines)
        if (line.rfind("2020-04-10,forecast,", 0) == 0)
            saw_observed_forecast = line.find(",,") == std::string::npos;
    CHECK(saw_observed_forecast);

    SUBCASE("CI row equals band minus point") {
        const Result js = run_cli([&] {
            auto a = base;
            a.insert(a.end(), {"--format", "json"});
            return a;
        }());
        REQUIRE(js.code == 0);
        const auto j = nlohmann::json::parse(js.out);
        const auto &cases = j["cases"];
        const std::size_t last = cases["level_hat"].size() - 1;
        const double point = cases["level_hat"][last];
        const long lo = std::lround(cases["lower"][last].get<double>() - point);
        const long hi = std::lround(cases["upper"][last].get<double>() - point);
        const std::string expected = "[" + std::to_string(lo) + " / +" + std::to_string(hi) + "]";
        CHECK(j["rows"].back()["cases"]["total"] == expected);
    }
    SUBCASE("deaths threshold is honoured") {
        auto json_run = [&](const char *threshold) {
            auto a = base;
            a.insert(a.end(), {"--deaths-threshold", threshold, "--format", "json"});
            const Result js = run_cli(a);
            REQUIRE(js.code == 0);
            return nlohmann::json::parse(js.out);
        };
        const auto ten = json_run("10");
        const auto fifty = json_run("50");
        CHECK(ten["cases"] == fifty["cases"]);
        CHECK(ten["deaths"]["y_hat"] != fifty["deaths"]["y_hat"]);
    }
}

TEST_CASE("forecast-only rows leave observed cells blank") {
    const Result r = run_cli({"report", "--data-path", cases_csv, "--deaths-path", deaths_csv, "--target", "Brazil",
                              "--seed", "7", "--n-sims", "1000", "-H", "3"});
    REQUIRE(r.code == 0);
    const auto lines = lines_of(r.out);
    const std::string row = lines[lines.size() - 2];
    CHECK(row.rfind("2020-04-18,forecast,", 0) == 0);
    CHECK(row.back() == ',');
}
