#include "latecomer/backtest.hpp"

#include "latecomer/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace latecomer {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Depends only on the base seed and the origin date, so an origin's bands do not
// change when other origins are added or removed.
std::uint64_t origin_seed(std::uint64_t seed, Date origin) {
    return splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(origin.time_since_epoch().count())));
}

struct OriginResult {
    OriginSummary summary;
    std::vector<ForecastCell> cells;
};

OriginResult fit_origin(const CountrySeries &target, const std::vector<CountrySeries> &peers, Date origin,
                        const BacktestConfig &config) {
    const CountrySeries truncated = truncate_at(target, origin);
    PanelBuild build = build_panel(truncated, peers, config.threshold, config.horizon, config.window);

    if (config.drop_leaky_peers) {
        const int last_tau = build.panel.tau_len + config.horizon;
        std::set<std::string> leaky;
        for (int j = 0; j < build.panel.peers(); ++j)
            if (build.panel.peer_date(j, last_tau) > origin)
                leaky.insert(build.panel.peer_names[static_cast<std::size_t>(j)]);
        if (!leaky.empty()) {
            std::vector<CountrySeries> kept;
            for (const auto &p : peers)
                if (!leaky.contains(p.name))
                    kept.push_back(p);
            build = build_panel(truncated, kept, config.threshold, config.horizon, config.window);
        }
    }
    const AlignedPanel &panel = build.panel;

    const LassoFit lasso = select_by_bic(panel.window_y(), panel.window_x(), panel.window_weights(), config.lasso);
    const EcmFit ecm = fit_ecm(panel, lasso);
    const ForecastPath path = simulate_bands(ecm, panel, config.horizon, config.n_sims,
                                             origin_seed(config.seed, origin), config.confidence, config.seed_mode);

    OriginResult out;
    out.summary.origin = origin;
    out.summary.tau_len = panel.tau_len;
    out.summary.selected_peers = ecm.support_names;
    out.summary.lambda = lasso.lambda;
    out.summary.gamma = ecm.gamma;
    out.summary.alpha = ecm.alpha;
    out.summary.fallback = ecm.fallback;
    for (int h = 1; h <= config.horizon; ++h) {
        const auto i = static_cast<std::size_t>(h - 1);
        ForecastCell cell;
        cell.origin = origin;
        cell.target_date = panel.target_date(panel.tau_len + h);
        cell.horizon = h;
        cell.level = path.level_hat[i];
        cell.lower = path.lower[i];
        cell.upper = path.upper[i];
        for (int j : ecm.support)
            if (panel.peer_date(j, panel.tau_len + h) > origin)
                cell.calendar_leak = true;
        out.cells.push_back(cell);
    }
    return out;
}

} // namespace

Score score(const std::vector<ForecastCell> &cells, const std::map<Date, double> &observed, int horizon) {
    if (horizon < 1)
        throw std::invalid_argument("score: horizon must be at least 1");
    Score s;
    s.mape_by_horizon.assign(static_cast<std::size_t>(horizon), 0.0);
    s.cells_by_horizon.assign(static_cast<std::size_t>(horizon), 0);
    double total = 0.0;
    for (const auto &cell : cells) {
        const auto it = observed.find(cell.target_date);
        if (it == observed.end() || !(it->second > 0.0))
            continue;
        if (cell.horizon < 1 || cell.horizon > horizon)
            throw std::invalid_argument("score: cell horizon out of range");
        const double ape = 100.0 * std::abs(cell.level - it->second) / it->second;
        total += ape;
        s.mape_worst = std::max(s.mape_worst, ape);
        s.mape_by_horizon[static_cast<std::size_t>(cell.horizon - 1)] += ape;
        ++s.cells_by_horizon[static_cast<std::size_t>(cell.horizon - 1)];
        ++s.n_scored;
    }
    if (s.n_scored == 0)
        throw DataError("no forecast cell overlaps the observed data");
    s.mape_total = total / s.n_scored;
    for (std::size_t h = 0; h < s.mape_by_horizon.size(); ++h)
        s.mape_by_horizon[h] = s.cells_by_horizon[h] > 0 ? s.mape_by_horizon[h] / s.cells_by_horizon[h]
                                                         : std::numeric_limits<double>::quiet_NaN();
    return s;
}

BacktestReport run_backtest(const CountrySeries &target, const std::vector<CountrySeries> &peers,
                            const BacktestConfig &config) {
    if (config.horizon < 1)
        throw std::invalid_argument("backtest horizon must be at least 1");
    if (config.window < 2)
        throw std::invalid_argument("backtest window must be at least 2");
    validate_series(target);
    const TauSeries full = to_tau(target, config.threshold);

    BacktestReport report;
    report.target = target.name;
    report.horizon = config.horizon;
    for (std::size_t i = 0; i < target.dates.size(); ++i)
        report.observed.emplace(target.dates[i], static_cast<double>(target.counts[i]));

    for (Date origin : target.dates) {
        if (origin < full.start_date)
            continue;
        const int tau_len = days_between(full.start_date, origin) + 1;
        if (tau_len < config.window + 1)
            continue;
        if (config.first_origin && origin < *config.first_origin)
            continue;
        if (config.last_origin && origin > *config.last_origin)
            continue;
        try {
            OriginResult r = fit_origin(target, peers, origin, config);
            report.origins.push_back(origin);
            report.fits.push_back(std::move(r.summary));
            report.cells.insert(report.cells.end(), r.cells.begin(), r.cells.end());
        } catch (const std::exception &e) {
            report.skipped.push_back({origin, e.what()});
        }
    }
    if (report.origins.empty() && report.skipped.empty())
        throw DataError(target.name + ": no origin with " + std::to_string(config.window + 1) +
                        " tau observations in the requested range");

    try {
        report.score = score(report.cells, report.observed, config.horizon);
    } catch (const DataError &) {
        report.score.reset();
    }
    return report;
}

} // namespace latecomer
