#pragma once

#include "latecomer/align.hpp"
#include "latecomer/ecm.hpp"
#include "latecomer/lasso.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace latecomer {

struct BacktestConfig {
    std::int64_t threshold = 100;
    int window = 21;
    int horizon = 14;
    int n_sims = 10000;
    std::uint64_t seed = 0;
    double confidence = 0.95;
    LassoConfig lasso;
    SeedMode seed_mode = SeedMode::observed;
    std::optional<Date> first_origin;
    std::optional<Date> last_origin;
    /// Exclude peers whose tau values needed at an origin lie after that origin's date.
    /// Off by default: such cells are only flagged.
    bool drop_leaky_peers = false;
};

struct ForecastCell {
    Date origin;
    Date target_date;
    int horizon = 0;
    double level = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    bool calendar_leak = false;
};

struct OriginSummary {
    Date origin;
    int tau_len = 0;
    std::vector<std::string> selected_peers;
    double lambda = 0.0;
    double gamma = 0.0;
    double alpha = 1.0;
    bool fallback = false;
};

struct SkippedOrigin {
    Date origin;
    std::string reason;
};

struct Score {
    double mape_total = 0.0;
    double mape_worst = 0.0;
    std::vector<double> mape_by_horizon; // NaN where a horizon has no scored cell
    std::vector<int> cells_by_horizon;
    int n_scored = 0;
};

struct BacktestReport {
    std::string target;
    std::vector<Date> origins;
    std::vector<OriginSummary> fits;
    std::vector<SkippedOrigin> skipped;
    std::vector<ForecastCell> cells;
    std::map<Date, double> observed;
    std::optional<Score> score;
    int horizon = 0;
};

/// Mean and max absolute percentage error over cells with a positive realised value.
/// Throws DataError when no cell can be scored.
Score score(const std::vector<ForecastCell> &cells, const std::map<Date, double> &observed, int horizon);

/// Refits and forecasts at every feasible origin (target has at least window + 1 tau
/// observations up to the origin). An origin whose fit fails is skipped with a reason.
BacktestReport run_backtest(const CountrySeries &target, const std::vector<CountrySeries> &peers,
                            const BacktestConfig &config);

} // namespace latecomer
