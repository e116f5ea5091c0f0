#pragma once

#include "latecomer/align.hpp"
#include "latecomer/backtest.hpp"
#include "latecomer/ecm.hpp"
#include "latecomer/lasso.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace latecomer::cli {

enum ExitCode : int { ok = 0, data_error = 2, fit_error = 3, bad_arguments = 4 };

struct RunConfig {
    std::string command; // ingest-check, forecast, backtest, report
    std::string data_path;
    std::string data_format = "jhu-wide"; // or long
    std::string target;
    std::string peers = "auto"; // or comma-separated names
    std::string metric = "cases";
    std::optional<std::int64_t> threshold; // defaults to 100 for cases, 10 for deaths
    int window = 21;                       // K
    int horizon = 14;                      // H
    int n_sims = 10000;
    std::optional<std::uint64_t> seed;
    double confidence = 0.95;
    std::string output; // empty writes the primary output to stdout
    std::string format = "csv";

    std::optional<Date> as_of;
    std::string seed_mode = "observed";
    bool standardize = true;
    bool intercept = false;

    std::optional<Date> origin_start;
    std::optional<Date> origin_end;
    bool drop_leaky_peers = false;

    std::string deaths_path;
    std::int64_t deaths_threshold = 10;
    int history = 11;

    std::int64_t effective_threshold() const;
    void validate() const;
};

/// Everything one forecast run produces.
struct ForecastRun {
    PanelBuild build;
    LassoFit lasso;
    EcmFit ecm;
    ForecastPath path;
};

std::vector<CountrySeries> load_series(const std::string &path, const std::string &format);

/// Loads data, aligns, fits and simulates for a single metric.
ForecastRun forecast_pipeline(const RunConfig &config);

int cmd_ingest_check(const RunConfig &config, std::ostream &out);
int cmd_forecast(const RunConfig &config, std::ostream &out);
int cmd_backtest(const RunConfig &config, std::ostream &out);
int cmd_report(const RunConfig &config, std::ostream &out);

/// Parses arguments, dispatches, and maps failures to exit codes with a JSON line on `err`.
int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

} // namespace latecomer::cli
