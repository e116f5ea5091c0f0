#pragma once

#include "latecomer/align.hpp"
#include "latecomer/lasso.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace latecomer {

/// Second-step error-correction fit on the LASSO-selected peers:
///   dy_t = dx_t' pi + gamma * (y_{t-1} - b0 - x_{t-1}' beta) + u_t
struct EcmFit {
    std::vector<int> support; // panel column indices
    std::vector<std::string> support_names;
    Eigen::VectorXd beta;     // long-run coefficients restricted to support
    double long_run_intercept = 0.0;
    Eigen::VectorXd pi;       // short-run coefficients on dx, same order as support
    double gamma = 0.0;
    double sigma2 = 0.0;
    double alpha = 1.0;
    int window = 0;           // K
    int n_params = 0;         // regressors kept after rank checks
    bool fallback = false;    // empty LASSO support, single-peer gamma-only model
    std::vector<int> taus;    // 1-based tau of each regression row
    Eigen::VectorXd fitted_log;
    Eigen::VectorXd residuals_u;
    Eigen::VectorXd row_weights;
    std::vector<std::string> warnings;
};

/// Weighted OLS of dy on [dx(support), z_{t-1}] over the panel window.
/// An empty support falls back to the best-correlated peer with an OLS long-run
/// slope and a gamma-only model. Collinear regressors are dropped with a warning.
EcmFit fit_ecm(const AlignedPanel &panel, const LassoFit &lasso);

enum class SeedMode { observed, fitted };

/// Recursive log forecasts for tau_len+1 .. tau_len+H using realised peer values.
Eigen::VectorXd forecast_log(const EcmFit &fit, const AlignedPanel &panel, int horizon,
                             SeedMode seed = SeedMode::observed);

/// alpha * exp(y_hat). Throws FitError if a level overflows.
Eigen::VectorXd forecast_levels(const EcmFit &fit, const Eigen::VectorXd &y_hat);

struct ForecastPath {
    std::vector<int> horizons;
    std::vector<std::string> dates; // ISO dates of tau_len + h
    std::vector<double> y_hat;
    std::vector<double> level_hat;
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<double> median; // of simulated levels
    std::vector<double> mean;   // of simulated levels
    std::vector<double> new_hat;
    std::vector<double> new_lower;
    std::vector<double> new_upper;
    std::vector<double> rate_hat; // fraction, not percent
    std::vector<double> rate_lower;
    std::vector<double> rate_upper;
    double last_observed = 0.0;   // level at tau_len
    int n_sims = 0;
    std::uint64_t seed = 0;
    double confidence = 0.95;
    std::vector<std::string> warnings;

    bool operator==(const ForecastPath &) const = default;
};

/// Monte Carlo bands from n_sims recursions with iid N(0, sigma2) shocks. Path i
/// draws from its own generator seeded by (seed, i), so results do not depend on
/// thread scheduling.
ForecastPath simulate_bands(const EcmFit &fit, const AlignedPanel &panel, int horizon, int n_sims,
                            std::uint64_t seed, double confidence, SeedMode seed_mode = SeedMode::observed);

} // namespace latecomer
