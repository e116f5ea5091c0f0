#pragma once

#include "latecomer/backtest.hpp"
#include "latecomer/ecm.hpp"
#include "latecomer/lasso.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace latecomer {

nlohmann::ordered_json to_json(const LassoFit &fit, const std::vector<std::string> &peer_names);
nlohmann::ordered_json to_json(const EcmFit &fit);
nlohmann::ordered_json to_json(const ForecastPath &path);
ForecastPath forecast_path_from_json(const nlohmann::ordered_json &j);
nlohmann::ordered_json to_json(const Score &score);
nlohmann::ordered_json to_json(const BacktestReport &report);

/// Table with columns Date, Total, New, GrowthRatePct, Lower, Upper. Levels are rounded.
std::string forecast_table_csv(const ForecastPath &path);

/// Rows are target dates, columns are origins, preceded by Date and Observed.
std::string backtest_matrix_csv(const BacktestReport &report);

} // namespace latecomer
