#include "latecomer/cli.hpp"

#include "latecomer/csv.hpp"
#include "latecomer/errors.hpp"
#include "latecomer/serialize.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace latecomer::cli {

using json = nlohmann::ordered_json;

namespace {

std::string read_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw DataError("cannot read data file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_output(const std::string &path, const std::string &content, std::ostream &out) {
    if (path.empty()) {
        out << content;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw std::invalid_argument("cannot write output file '" + path + "'");
    f << content;
}

std::vector<std::string> split_names(const std::string &list) {
    std::vector<std::string> names;
    std::string current;
    std::istringstream in(list);
    while (std::getline(in, current, ','))
        if (!current.empty())
            names.push_back(current);
    return names;
}

LassoConfig lasso_config(const RunConfig &c) {
    LassoConfig lc;
    lc.standardize = c.standardize;
    lc.intercept = c.intercept;
    return lc;
}

SeedMode seed_mode(const RunConfig &c) { return c.seed_mode == "fitted" ? SeedMode::fitted : SeedMode::observed; }

struct Selection {
    CountrySeries target;
    std::vector<CountrySeries> peers;
};

Selection select(const std::vector<CountrySeries> &all, const RunConfig &c, std::optional<Date> cutoff) {
    const CountrySeries *target = find_country(all, c.target);
    if (target == nullptr)
        throw DataError("target '" + c.target + "' not found in data");
    Selection s;
    s.target = cutoff ? truncate_at(*target, *cutoff) : *target;
    if (c.peers == "auto") {
        for (const auto &series : all)
            if (series.name != c.target)
                s.peers.push_back(cutoff ? truncate_at(series, *cutoff) : series);
    } else {
        for (const auto &name : split_names(c.peers)) {
            const CountrySeries *p = find_country(all, name);
            if (p == nullptr)
                throw DataError("peer '" + name + "' not found in data");
            s.peers.push_back(cutoff ? truncate_at(*p, *cutoff) : *p);
        }
    }
    return s;
}

json drop_log(const PanelBuild &build) {
    json arr = json::array();
    for (const auto &d : build.dropped)
        arr.push_back(json::parse(d.to_json_line()));
    return arr;
}

json forecast_sidecar(const RunConfig &c, const ForecastRun &run) {
    const AlignedPanel &panel = run.build.panel;
    json j;
    j["target"] = panel.target_name;
    j["metric"] = c.metric;
    j["threshold"] = panel.threshold;
    j["target_start"] = format_iso(panel.target_start);
    j["tau_len"] = panel.tau_len;
    j["window"] = panel.window;
    j["horizon"] = c.horizon;
    j["candidate_peers"] = panel.peer_names;
    j["selected_peers"] = run.ecm.support_names;
    j["lambda"] = run.lasso.lambda;
    j["bic"] = std::isfinite(run.lasso.bic) ? json(run.lasso.bic) : json(nullptr);
    j["gamma"] = run.ecm.gamma;
    j["alpha"] = run.ecm.alpha;
    j["sigma2"] = run.ecm.sigma2;
    j["lasso"] = to_json(run.lasso, panel.peer_names);
    j["ecm"] = to_json(run.ecm);
    j["dropped"] = drop_log(run.build);
    j["warnings"] = run.build.warnings;
    return j;
}

std::string sign_int(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%+lld", std::llround(v));
    return buf;
}

std::string sign_pct(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%+.1f%%", v);
    return buf;
}

std::string pct(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f%%", v);
    return buf;
}

// Total / New / Growth cells of one metric on one report row.
struct MetricCells {
    std::string total, fresh, growth, observed;
};

MetricCells observed_cells(const CountrySeries &s, Date d) {
    MetricCells m;
    const auto now = s.count_on(d);
    if (!now)
        return m;
    m.total = std::to_string(*now);
    m.observed = m.total;
    if (const auto before = s.count_on(add_days(d, -1)); before) {
        m.fresh = std::to_string(*now - *before);
        if (*before > 0)
            m.growth = pct(100.0 * static_cast<double>(*now - *before) / static_cast<double>(*before));
    }
    return m;
}

} // namespace

std::int64_t RunConfig::effective_threshold() const {
    if (threshold)
        return *threshold;
    return metric == "deaths" ? 10 : 100;
}

void RunConfig::validate() const {
    if (horizon < 1)
        throw std::invalid_argument("H must be at least 1");
    if (window < 2)
        throw std::invalid_argument("K must be at least 2");
    if (!(confidence > 0.0 && confidence < 1.0))
        throw std::invalid_argument("confidence must lie in (0, 1)");
    if (n_sims < 1000)
        throw std::invalid_argument("n-sims must be at least 1000");
    if (effective_threshold() < 1 || deaths_threshold < 1)
        throw std::invalid_argument("threshold must be positive");
    if (history < 0)
        throw std::invalid_argument("history must be non-negative");
    if (command != "ingest-check" && target.empty())
        throw std::invalid_argument("--target is required");
    if ((command == "forecast" || command == "backtest" || command == "report") && !seed)
        throw std::invalid_argument("--seed is required for " + command);
    if (command == "report" && deaths_path.empty())
        throw std::invalid_argument("--deaths-path is required for report");
}

std::vector<CountrySeries> load_series(const std::string &path, const std::string &format) {
    const std::string text = read_file(path);
    if (format == "jhu-wide")
        return parse_jhu_wide(text);
    if (format == "long")
        return parse_long(text);
    throw std::invalid_argument("unknown data format '" + format + "'");
}

ForecastRun forecast_pipeline(const RunConfig &c) {
    const auto all = load_series(c.data_path, c.data_format);
    const Selection sel = select(all, c, c.as_of);
    ForecastRun run;
    run.build = build_panel(sel.target, sel.peers, c.effective_threshold(), c.horizon, c.window);
    const AlignedPanel &panel = run.build.panel;
    run.lasso = select_by_bic(panel.window_y(), panel.window_x(), panel.window_weights(), lasso_config(c));
    run.ecm = fit_ecm(panel, run.lasso);
    run.path = simulate_bands(run.ecm, panel, c.horizon, c.n_sims, *c.seed, c.confidence, seed_mode(c));
    return run;
}

int cmd_ingest_check(const RunConfig &c, std::ostream &out) {
    const auto all = load_series(c.data_path, c.data_format);
    std::ostringstream lines;
    for (const auto &s : all) {
        validate_series(s);
        json j;
        j["country"] = s.name;
        j["first_date"] = s.dates.empty() ? json(nullptr) : json(format_iso(s.dates.front()));
        j["last_date"] = s.dates.empty() ? json(nullptr) : json(format_iso(s.dates.back()));
        j["days"] = s.size();
        j["max_count"] = s.counts.empty() ? 0 : *std::max_element(s.counts.begin(), s.counts.end());
        try {
            const TauSeries tau = to_tau(s, c.effective_threshold());
            j["tau_start"] = format_iso(tau.start_date);
            j["tau_len"] = tau.log_counts.size();
        } catch (const DataError &e) {
            j["tau_start"] = nullptr;
            j["tau_len"] = 0;
            j["note"] = e.what();
        }
        const auto revisions = find_revisions(s);
        j["revisions"] = revisions.size();
        lines << j.dump() << '\n';
        for (const auto &r : revisions) {
            json w;
            w["warning"] = "downward_revision";
            w["country"] = r.country;
            w["date"] = format_iso(r.date);
            w["previous"] = r.previous;
            w["current"] = r.current;
            lines << w.dump() << '\n';
        }
    }
    write_output(c.output, lines.str(), out);
    return ok;
}

int cmd_forecast(const RunConfig &c, std::ostream &out) {
    const ForecastRun run = forecast_pipeline(c);
    if (c.format == "json") {
        write_output(c.output, to_json(run.path).dump(2) + "\n", out);
    } else {
        write_output(c.output, forecast_table_csv(run.path), out);
    }
    if (!c.output.empty())
        write_output(c.output + ".fit.json", forecast_sidecar(c, run).dump(2) + "\n", out);
    return ok;
}

int cmd_backtest(const RunConfig &c, std::ostream &out) {
    const auto all = load_series(c.data_path, c.data_format);
    const Selection sel = select(all, c, c.as_of);
    BacktestConfig bc;
    bc.threshold = c.effective_threshold();
    bc.window = c.window;
    bc.horizon = c.horizon;
    bc.n_sims = c.n_sims;
    bc.seed = *c.seed;
    bc.confidence = c.confidence;
    bc.lasso = lasso_config(c);
    bc.seed_mode = seed_mode(c);
    bc.first_origin = c.origin_start;
    bc.last_origin = c.origin_end;
    bc.drop_leaky_peers = c.drop_leaky_peers;
    const BacktestReport report = run_backtest(sel.target, sel.peers, bc);
    if (report.origins.empty())
        throw FitError("every backtest origin failed; first reason: " + report.skipped.front().reason);

    if (c.format == "json") {
        write_output(c.output, to_json(report).dump(2) + "\n", out);
    } else {
        write_output(c.output, backtest_matrix_csv(report), out);
        if (!c.output.empty()) {
            json summary;
            summary["target"] = report.target;
            summary["origins"] = to_json(report)["origins"];
            summary["skipped"] = to_json(report)["skipped"];
            summary["score"] = report.score ? to_json(*report.score) : json(nullptr);
            write_output(c.output + ".summary.json", summary.dump(2) + "\n", out);
        }
    }
    return ok;
}

int cmd_report(const RunConfig &c, std::ostream &out) {
    RunConfig cases = c;
    cases.metric = "cases";
    RunConfig deaths = c;
    deaths.metric = "deaths";
    deaths.data_path = c.deaths_path;
    deaths.threshold = c.deaths_threshold;

    const ForecastRun case_run = forecast_pipeline(cases);
    const ForecastRun death_run = forecast_pipeline(deaths);

    const auto case_all = load_series(cases.data_path, c.data_format);
    const auto death_all = load_series(deaths.data_path, c.data_format);
    const CountrySeries *case_series = find_country(case_all, c.target);
    const CountrySeries *death_series = find_country(death_all, c.target);

    const Date last_case = case_run.build.panel.target_date(case_run.build.panel.tau_len);
    const Date last_death = death_run.build.panel.target_date(death_run.build.panel.tau_len);
    const Date last_observed = std::max(last_case, last_death);

    struct Row {
        std::string date, source;
        MetricCells cases, deaths;
    };
    std::vector<Row> rows;
    for (int back = c.history - 1; back >= 0; --back) {
        const Date d = add_days(last_observed, -back);
        Row r{format_iso(d), "observed", {}, {}};
        if (d <= last_case)
            r.cases = observed_cells(*case_series, d);
        if (d <= last_death)
            r.deaths = observed_cells(*death_series, d);
        rows.push_back(std::move(r));
    }

    std::map<std::string, std::size_t> forecast_rows;
    auto add_forecast = [&](const ForecastPath &p, const CountrySeries &series, bool is_cases) {
        for (std::size_t i = 0; i < p.horizons.size(); ++i) {
            auto [it, inserted] = forecast_rows.emplace(p.dates[i], 0);
            if (inserted) {
                it->second = rows.size();
                rows.push_back({p.dates[i], "forecast", {}, {}});
            }
            MetricCells &m = is_cases ? rows[it->second].cases : rows[it->second].deaths;
            m.total = std::to_string(std::llround(p.level_hat[i]));
            m.fresh = std::to_string(std::llround(p.new_hat[i]));
            m.growth = pct(100.0 * p.rate_hat[i]);
            if (const auto realised = series.count_on(parse_iso_date(p.dates[i])); realised)
                m.observed = std::to_string(*realised);
        }
    };
    add_forecast(case_run.path, *case_series, true);
    add_forecast(death_run.path, *death_series, false);

    auto ci_cells = [](const ForecastPath &p) {
        const std::size_t i = p.horizons.size() - 1;
        MetricCells m;
        m.total = "[" + sign_int(p.lower[i] - p.level_hat[i]) + " / " + sign_int(p.upper[i] - p.level_hat[i]) + "]";
        m.fresh = "[" + sign_int(p.new_lower[i] - p.new_hat[i]) + " / " + sign_int(p.new_upper[i] - p.new_hat[i]) + "]";
        m.growth = "[" + sign_pct(100.0 * (p.rate_lower[i] - p.rate_hat[i])) + " / " +
                   sign_pct(100.0 * (p.rate_upper[i] - p.rate_hat[i])) + "]";
        return m;
    };
    char conf[16];
    std::snprintf(conf, sizeof conf, "%g", 100.0 * c.confidence);
    Row ci{"CI(" + std::string(conf) + "%) on " + case_run.path.dates.back(), "interval", ci_cells(case_run.path),
           ci_cells(death_run.path)};
    rows.push_back(ci);

    if (c.format == "json") {
        json j;
        j["target"] = c.target;
        json table = json::array();
        for (const auto &r : rows) {
            table.push_back({{"date", r.date},
                             {"source", r.source},
                             {"cases", {{"total", r.cases.total}, {"new", r.cases.fresh}, {"growth", r.cases.growth},
                                        {"observed", r.cases.observed}}},
                             {"deaths", {{"total", r.deaths.total}, {"new", r.deaths.fresh},
                                         {"growth", r.deaths.growth}, {"observed", r.deaths.observed}}}});
        }
        j["rows"] = table;
        j["cases"] = to_json(case_run.path);
        j["deaths"] = to_json(death_run.path);
        write_output(c.output, j.dump(2) + "\n", out);
        return ok;
    }

    std::ostringstream table;
    table << "Date,Source,CasesTotal,CasesNew,CasesGrowthRate,CasesObserved,"
             "DeathsTotal,DeathsNew,DeathsGrowthRate,DeathsObserved\n";
    for (const auto &r : rows)
        table << csv::escape(r.date) << ',' << r.source << ',' << r.cases.total << ',' << r.cases.fresh << ','
              << r.cases.growth << ',' << r.cases.observed << ',' << r.deaths.total << ',' << r.deaths.fresh << ','
              << r.deaths.growth << ',' << r.deaths.observed << '\n';
    write_output(c.output, table.str(), out);
    return ok;
}

namespace {

void add_data_options(CLI::App *sub, RunConfig &c) {
    sub->add_option("--data-path", c.data_path, "Input CSV")->required();
    sub->add_option("--data-format", c.data_format, "jhu-wide or long")
        ->check(CLI::IsMember({"jhu-wide", "long"}));
    sub->add_option("--metric", c.metric, "cases or deaths")->check(CLI::IsMember({"cases", "deaths"}));
    sub->add_option("--threshold", c.threshold, "Alignment threshold (default 100 cases, 10 deaths)");
    sub->add_option("--output", c.output, "Output path (stdout when omitted)");
}

void add_model_options(CLI::App *sub, RunConfig &c) {
    sub->add_option("--target", c.target, "Latecomer country")->required();
    sub->add_option("--peers", c.peers, "auto, or comma-separated country names");
    sub->add_option("-K,--K", c.window, "Rolling estimation window");
    sub->add_option("-H,--H", c.horizon, "Maximum forecast horizon");
    sub->add_option("--n-sims", c.n_sims, "Simulated paths for the bands");
    sub->add_option("--seed", c.seed, "Random seed")->required();
    sub->add_option("--confidence", c.confidence, "Band coverage");
    sub->add_option("--format", c.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--seed-mode", c.seed_mode, "observed or fitted recursion start")
        ->check(CLI::IsMember({"observed", "fitted"}));
    sub->add_flag("!--no-standardize", c.standardize, "Penalise raw rather than standardized coefficients");
    sub->add_flag("--intercept", c.intercept, "Add an unpenalised long-run intercept");
}

std::optional<Date> date_option(const std::string &s) {
    if (s.empty())
        return std::nullopt;
    return parse_iso_date(s);
}

json error_json(const char *kind, const std::string &message, int code) {
    json j;
    j["error"] = kind;
    j["message"] = message;
    j["exit_code"] = code;
    return j;
}

} // namespace

int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
    CLI::App app{"Short-term forecasts for epidemic latecomers from aligned peer countries"};
    app.require_subcommand(1);
    RunConfig c;
    std::string as_of, origin_start, origin_end;

    auto *ingest = app.add_subcommand("ingest-check", "Parse and validate a data file");
    add_data_options(ingest, c);

    auto *forecast = app.add_subcommand("forecast", "Forecast table with bands and fit diagnostics");
    add_data_options(forecast, c);
    add_model_options(forecast, c);
    forecast->add_option("--as-of", as_of, "Ignore data after this ISO date");

    auto *backtest = app.add_subcommand("backtest", "Rolling-origin evaluation");
    add_data_options(backtest, c);
    add_model_options(backtest, c);
    backtest->add_option("--as-of", as_of, "Ignore data after this ISO date");
    backtest->add_option("--origin-start", origin_start, "First origin (ISO date)");
    backtest->add_option("--origin-end", origin_end, "Last origin (ISO date)");
    backtest->add_flag("--drop-leaky-peers", c.drop_leaky_peers,
                       "Exclude peers whose needed values postdate the origin");

    auto *report = app.add_subcommand("report", "Combined cases and deaths table");
    add_data_options(report, c);
    add_model_options(report, c);
    report->add_option("--deaths-path", c.deaths_path, "Deaths CSV")->required();
    report->add_option("--deaths-threshold", c.deaths_threshold, "Alignment threshold for deaths");
    report->add_option("--history", c.history, "Observed rows shown before the forecast");
    report->add_option("--as-of", as_of, "Ignore data after this ISO date");

    std::vector<std::string> args;
    for (int i = argc - 1; i > 0; --i)
        args.emplace_back(argv[i]);
    try {
        app.parse(args);
    } catch (const CLI::CallForHelp &) {
        out << app.help();
        return ok;
    } catch (const CLI::CallForAllHelp &) {
        out << app.help("", CLI::AppFormatMode::All);
        return ok;
    } catch (const CLI::ParseError &e) {
        err << error_json("bad_arguments", e.what(), bad_arguments).dump() << '\n';
        return bad_arguments;
    }

    try {
        c.command = app.get_subcommands().front()->get_name();
        c.as_of = date_option(as_of);
        c.origin_start = date_option(origin_start);
        c.origin_end = date_option(origin_end);
        c.validate();
    } catch (const std::exception &e) {
        err << error_json("bad_arguments", e.what(), bad_arguments).dump() << '\n';
        return bad_arguments;
    }

    try {
        if (c.command == "ingest-check")
            return cmd_ingest_check(c, out);
        if (c.command == "forecast")
            return cmd_forecast(c, out);
        if (c.command == "backtest")
            return cmd_backtest(c, out);
        return cmd_report(c, out);
    } catch (const DataError &e) {
        err << error_json("data_error", e.what(), data_error).dump() << '\n';
        return data_error;
    } catch (const FitError &e) {
        err << error_json("fit_error", e.what(), fit_error).dump() << '\n';
        return fit_error;
    } catch (const std::invalid_argument &e) {
        err << error_json("bad_arguments", e.what(), bad_arguments).dump() << '\n';
        return bad_arguments;
    } catch (const std::exception &e) {
        err << error_json("fit_error", e.what(), fit_error).dump() << '\n';
        return fit_error;
    }
}

} // namespace latecomer::cli
