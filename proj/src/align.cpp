#include "latecomer/align.hpp"

#include "latecomer/csv.hpp"
#include "latecomer/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

namespace latecomer {

namespace {

std::int64_t parse_count(const std::string &cell, std::size_t row, std::size_t column) {
    std::string_view s = cell;
    while (!s.empty() && s.front() == ' ')
        s.remove_prefix(1);
    while (!s.empty() && s.back() == ' ')
        s.remove_suffix(1);
    std::int64_t value = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size())
        throw ParseError("non-numeric count '" + cell + "'", row, column);
    if (value < 0)
        throw ParseError("negative count '" + cell + "'", row, column);
    return value;
}

std::size_t require_column(const std::vector<std::string> &header, std::initializer_list<std::string_view> names) {
    for (std::size_t i = 0; i < header.size(); ++i)
        for (auto name : names)
            if (header[i] == name)
                return i;
    const std::string missing(*names.begin());
    throw FormatError("malformed header: missing column '" + missing + "'", missing);
}

} // namespace

std::optional<std::int64_t> CountrySeries::count_on(Date d) const {
    if (dates.empty() || d < dates.front() || d > dates.back())
        return std::nullopt;
    return counts[static_cast<std::size_t>(days_between(dates.front(), d))];
}

std::vector<CountrySeries> parse_jhu_wide(std::string_view csv_text) {
    const auto lines = csv::split_lines(csv_text);
    if (lines.empty())
        throw FormatError("malformed header: empty input", "Province/State");
    const auto header = csv::split_record(lines.front());
    const std::size_t province_col = require_column(header, {"Province/State"});
    const std::size_t country_col = require_column(header, {"Country/Region"});
    const std::size_t lat_col = require_column(header, {"Lat"});
    const std::size_t long_col = require_column(header, {"Long", "Long_"});
    const std::size_t first_date_col = std::max({province_col, country_col, lat_col, long_col}) + 1;
    if (first_date_col >= header.size())
        throw FormatError("malformed header: no date columns", "<date>");

    std::vector<Date> dates;
    for (std::size_t c = first_date_col; c < header.size(); ++c) {
        Date d;
        try {
            d = parse_us_short_date(header[c]);
        } catch (const std::invalid_argument &) {
            throw FormatError("malformed header: '" + header[c] + "' is not a M/D/YY date", header[c]);
        }
        if (!dates.empty() && d != add_days(dates.back(), 1))
            throw FormatError("malformed header: date columns are not consecutive days at '" + header[c] + "'",
                              header[c]);
        dates.push_back(d);
    }

    std::map<std::string, std::vector<std::int64_t>> totals;
    for (std::size_t r = 1; r < lines.size(); ++r) {
        if (lines[r].empty())
            continue;
        const auto fields = csv::split_record(lines[r]);
        if (fields.size() != header.size())
            throw ParseError("expected " + std::to_string(header.size()) + " fields, found " +
                                 std::to_string(fields.size()),
                             r + 1, std::min(fields.size(), header.size()));
        const std::string &country = fields[country_col];
        if (country.empty())
            throw ParseError("empty Country/Region", r + 1, country_col + 1);
        auto &acc = totals[country];
        acc.resize(dates.size(), 0);
        for (std::size_t c = first_date_col; c < header.size(); ++c)
            acc[c - first_date_col] += parse_count(fields[c], r + 1, c + 1);
    }

    std::vector<CountrySeries> out;
    out.reserve(totals.size());
    for (auto &[name, counts] : totals)
        out.push_back(CountrySeries{name, dates, std::move(counts)});
    return out;
}

std::vector<CountrySeries> parse_long(std::string_view csv_text) {
    const auto lines = csv::split_lines(csv_text);
    if (lines.empty())
        throw FormatError("malformed header: empty input", "country");
    const auto header = csv::split_record(lines.front());
    const std::size_t country_col = require_column(header, {"country"});
    const std::size_t date_col = require_column(header, {"date"});
    const std::size_t count_col = require_column(header, {"cumulative"});

    std::map<std::string, std::map<Date, std::int64_t>> grouped;
    for (std::size_t r = 1; r < lines.size(); ++r) {
        if (lines[r].empty())
            continue;
        const auto fields = csv::split_record(lines[r]);
        if (fields.size() != header.size())
            throw ParseError("expected " + std::to_string(header.size()) + " fields, found " +
                                 std::to_string(fields.size()),
                             r + 1, std::min(fields.size(), header.size()));
        Date d;
        try {
            d = parse_iso_date(fields[date_col]);
        } catch (const std::invalid_argument &e) {
            throw ParseError(e.what(), r + 1, date_col + 1);
        }
        const auto count = parse_count(fields[count_col], r + 1, count_col + 1);
        auto [it, inserted] = grouped[fields[country_col]].emplace(d, count);
        if (!inserted)
            throw DataError("duplicate row for (" + fields[country_col] + ", " + format_iso(d) + ") at row " +
                            std::to_string(r + 1));
    }

    std::vector<CountrySeries> out;
    for (auto &[name, by_date] : grouped) {
        CountrySeries s{name, {}, {}};
        for (auto &[d, c] : by_date) {
            if (!s.dates.empty() && d != add_days(s.dates.back(), 1))
                throw DataError(name + ": date gap between " + format_iso(s.dates.back()) + " and " + format_iso(d));
            s.dates.push_back(d);
            s.counts.push_back(c);
        }
        out.push_back(std::move(s));
    }
    return out;
}

void validate_series(const CountrySeries &series) {
    if (series.dates.size() != series.counts.size())
        throw DataError(series.name + ": dates and counts differ in length");
    for (std::size_t i = 1; i < series.dates.size(); ++i)
        if (series.dates[i] != add_days(series.dates[i - 1], 1))
            throw DataError(series.name + ": dates are not consecutive at " + format_iso(series.dates[i]));
    for (std::size_t i = 0; i < series.counts.size(); ++i)
        if (series.counts[i] < 0)
            throw DataError(series.name + ": negative count on " + format_iso(series.dates[i]));
}

std::vector<Revision> find_revisions(const CountrySeries &series) {
    std::vector<Revision> out;
    for (std::size_t i = 1; i < series.counts.size(); ++i)
        if (series.counts[i] < series.counts[i - 1])
            out.push_back({series.name, series.dates[i], series.counts[i - 1], series.counts[i]});
    return out;
}

CountrySeries truncate_at(const CountrySeries &series, Date last) {
    CountrySeries out{series.name, {}, {}};
    for (std::size_t i = 0; i < series.dates.size() && series.dates[i] <= last; ++i) {
        out.dates.push_back(series.dates[i]);
        out.counts.push_back(series.counts[i]);
    }
    return out;
}

const CountrySeries *find_country(const std::vector<CountrySeries> &all, std::string_view name) {
    auto it = std::find_if(all.begin(), all.end(), [&](const CountrySeries &s) { return s.name == name; });
    return it == all.end() ? nullptr : &*it;
}

TauSeries to_tau(const CountrySeries &series, std::int64_t threshold) {
    if (threshold <= 0)
        throw std::invalid_argument("threshold must be positive");
    auto first = std::find_if(series.counts.begin(), series.counts.end(),
                              [&](std::int64_t c) { return c >= threshold; });
    if (first == series.counts.end()) {
        const std::int64_t max_count =
            series.counts.empty() ? 0 : *std::max_element(series.counts.begin(), series.counts.end());
        throw NotLatecomerError(series.name, threshold, max_count);
    }
    const auto start = static_cast<std::size_t>(first - series.counts.begin());
    TauSeries out{{}, series.dates[start]};
    out.log_counts.reserve(series.counts.size() - start);
    for (std::size_t i = start; i < series.counts.size(); ++i) {
        if (series.counts[i] <= 0)
            throw DataError(series.name + ": non-positive cumulative count on " + format_iso(series.dates[i]) +
                            " after reaching the threshold");
        out.log_counts.push_back(std::log(static_cast<double>(series.counts[i])));
    }
    return out;
}

Eigen::VectorXd inflation_weights(int window_len) {
    if (window_len < 1)
        throw std::invalid_argument("window length must be positive");
    Eigen::VectorXd w = Eigen::VectorXd::Ones(window_len);
    for (int i = 0; i < std::min(3, window_len); ++i)
        w(window_len - 1 - i) = 4.0 - i;
    return w;
}

std::string DropRecord::to_json_line() const {
    nlohmann::ordered_json j;
    j["peer"] = peer;
    j["reason"] = reason;
    j["len"] = len;
    j["required"] = required;
    return j.dump();
}

PanelBuild build_panel(const CountrySeries &target, const std::vector<CountrySeries> &peers,
                       std::int64_t threshold, int max_horizon, int window) {
    if (max_horizon < 1)
        throw std::invalid_argument("max horizon must be at least 1");
    if (window < 2)
        throw std::invalid_argument("window must be at least 2");
    validate_series(target);

    PanelBuild out;
    AlignedPanel &panel = out.panel;
    const TauSeries target_tau = to_tau(target, threshold);
    panel.target_name = target.name;
    panel.threshold = threshold;
    panel.max_horizon = max_horizon;
    panel.target_start = target_tau.start_date;
    panel.tau_len = static_cast<int>(target_tau.log_counts.size());
    panel.y = Eigen::Map<const Eigen::VectorXd>(target_tau.log_counts.data(), panel.tau_len);

    const int required = panel.tau_len + max_horizon;

    std::vector<const CountrySeries *> ordered;
    for (const auto &p : peers)
        ordered.push_back(&p);
    std::sort(ordered.begin(), ordered.end(),
              [](const CountrySeries *a, const CountrySeries *b) { return a->name < b->name; });
    for (std::size_t i = 1; i < ordered.size(); ++i)
        if (ordered[i]->name == ordered[i - 1]->name)
            throw DataError("duplicate peer '" + ordered[i]->name + "'");

    std::vector<std::vector<double>> columns;
    for (const CountrySeries *peer : ordered) {
        if (peer->name == target.name) {
            out.dropped.push_back({peer->name, "is_target", 0, required});
            continue;
        }
        TauSeries tau;
        try {
            validate_series(*peer);
            tau = to_tau(*peer, threshold);
        } catch (const NotLatecomerError &) {
            out.dropped.push_back({peer->name, "below_threshold", 0, required});
            continue;
        } catch (const DataError &e) {
            out.dropped.push_back({peer->name, "data_error", 0, required});
            out.warnings.push_back(std::string("peer dropped: ") + e.what());
            continue;
        }
        const int len = static_cast<int>(tau.log_counts.size());
        if (len < required) {
            out.dropped.push_back({peer->name, "too_short", len, required});
            continue;
        }
        tau.log_counts.resize(static_cast<std::size_t>(required));
        columns.push_back(std::move(tau.log_counts));
        panel.peer_names.push_back(peer->name);
        panel.peer_starts.push_back(tau.start_date);
    }
    if (columns.empty())
        throw DataError("no peer has the " + std::to_string(required) + " tau observations needed for " +
                        target.name);

    panel.x.resize(required, static_cast<Eigen::Index>(columns.size()));
    for (std::size_t j = 0; j < columns.size(); ++j)
        panel.x.col(static_cast<Eigen::Index>(j)) =
            Eigen::Map<const Eigen::VectorXd>(columns[j].data(), required);

    panel.window = window;
    if (panel.tau_len < window) {
        out.warnings.push_back("only " + std::to_string(panel.tau_len) + " tau observations for " + target.name +
                               "; window shrinks from " + std::to_string(window));
        panel.window = panel.tau_len;
    }
    panel.weights = Eigen::VectorXd::Ones(panel.tau_len);
    panel.weights.tail(panel.window) = inflation_weights(panel.window);
    return out;
}

} // namespace latecomer
