#pragma once

#include "latecomer/date.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace latecomer {

/// Cumulative counts (cases or deaths) for one country on consecutive days.
struct CountrySeries {
    std::string name;
    std::vector<Date> dates;
    std::vector<std::int64_t> counts;

    std::size_t size() const { return dates.size(); }
    std::optional<std::int64_t> count_on(Date d) const;
};

/// A day-over-day decrease in a cumulative series. Kept in the data, reported to the user.
struct Revision {
    std::string country;
    Date date;
    std::int64_t previous;
    std::int64_t current;
};

/// JHU CSSE wide layout: `Province/State,Country/Region,Lat,Long,<M/D/YY>...`.
/// Province rows are summed per country. Output is sorted by country name.
std::vector<CountrySeries> parse_jhu_wide(std::string_view csv_text);

/// Long layout `country,date,cumulative` with ISO dates, in any row order.
std::vector<CountrySeries> parse_long(std::string_view csv_text);

/// Throws DataError on gaps, unsorted dates, negative counts or length mismatch.
void validate_series(const CountrySeries &series);

std::vector<Revision> find_revisions(const CountrySeries &series);

/// Keeps observations dated on or before `last`.
CountrySeries truncate_at(const CountrySeries &series, Date last);

const CountrySeries *find_country(const std::vector<CountrySeries> &all, std::string_view name);

/// Log counts re-indexed to days since the threshold was first reached.
struct TauSeries {
    std::vector<double> log_counts; // index 0 is tau = 1
    Date start_date;
};

/// Throws NotLatecomerError when the threshold is never reached and DataError
/// on a non-positive count after the start.
TauSeries to_tau(const CountrySeries &series, std::int64_t threshold);

/// Row weights for the estimation window: 1 everywhere, then 2, 3, 4 on the three newest rows.
/// For window_len < 4 the tail of {2, 3, 4} is used.
Eigen::VectorXd inflation_weights(int window_len);

/// Target and peers on the common tau scale.
struct AlignedPanel {
    std::string target_name;
    std::vector<std::string> peer_names;
    std::int64_t threshold = 100;
    int tau_len = 0;     // observed target days on the tau scale
    int window = 0;      // estimation window actually used (<= tau_len)
    int max_horizon = 0; // peer rows available beyond tau_len
    Date target_start{};
    std::vector<Date> peer_starts;

    Eigen::VectorXd y;       // tau_len target log counts
    Eigen::MatrixXd x;       // (tau_len + max_horizon) x p peer log counts
    Eigen::VectorXd weights; // tau_len, ones outside the inflated tail

    int peers() const { return static_cast<int>(peer_names.size()); }
    /// 0-based row of the first window observation.
    int window_begin() const { return tau_len - window; }

    Eigen::VectorXd window_y() const { return y.segment(window_begin(), window); }
    Eigen::MatrixXd window_x() const { return x.middleRows(window_begin(), window); }
    Eigen::VectorXd window_weights() const { return weights.segment(window_begin(), window); }

    /// Calendar date of the target's 1-based tau.
    Date target_date(int tau) const { return add_days(target_start, tau - 1); }
    /// Calendar date at which peer `j` was at the 1-based tau.
    Date peer_date(int j, int tau) const { return add_days(peer_starts[static_cast<std::size_t>(j)], tau - 1); }
};

/// A peer excluded while building the panel.
struct DropRecord {
    std::string peer;
    std::string reason; // too_short, below_threshold, data_error, is_target
    int len = 0;
    int required = 0;

    std::string to_json_line() const;
};

struct PanelBuild {
    AlignedPanel panel;
    std::vector<DropRecord> dropped;
    std::vector<std::string> warnings;
};

/// Aligns target and peers. Peers are ordered by name. Peers with fewer than
/// tau_len + max_horizon tau observations are dropped; if tau_len < window the
/// window shrinks to tau_len with a warning. Throws DataError if no peer survives.
PanelBuild build_panel(const CountrySeries &target, const std::vector<CountrySeries> &peers,
                       std::int64_t threshold, int max_horizon, int window);

} // namespace latecomer
