#include "latecomer/ecm.hpp"

#include "latecomer/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <thread>

namespace latecomer {

namespace {

double weighted_correlation(const Eigen::VectorXd &a, const Eigen::VectorXd &b, const Eigen::VectorXd &w) {
    const double wsum = w.sum();
    const double ma = w.dot(a) / wsum;
    const double mb = w.dot(b) / wsum;
    const Eigen::ArrayXd da = a.array() - ma;
    const Eigen::ArrayXd db = b.array() - mb;
    const double saa = (w.array() * da * da).sum();
    const double sbb = (w.array() * db * db).sum();
    if (saa <= 0.0 || sbb <= 0.0)
        return 0.0;
    return (w.array() * da * db).sum() / std::sqrt(saa * sbb);
}

// Index of the peer most correlated with the target over the window.
int best_correlated_peer(const AlignedPanel &panel) {
    const Eigen::VectorXd y = panel.window_y();
    const Eigen::MatrixXd x = panel.window_x();
    const Eigen::VectorXd w = panel.window_weights();
    int best = 0;
    double best_abs = -1.0;
    for (int j = 0; j < panel.peers(); ++j) {
        const double r = std::abs(weighted_correlation(y, x.col(j), w));
        if (r > best_abs) {
            best_abs = r;
            best = j;
        }
    }
    return best;
}

double quantile_sorted(const std::vector<double> &sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

struct Band {
    double lower;
    double median;
    double upper;
};

Band band_of(std::vector<double> values, double confidence) {
    std::sort(values.begin(), values.end());
    const double tail = 0.5 * (1.0 - confidence);
    return {quantile_sorted(values, tail), quantile_sorted(values, 0.5), quantile_sorted(values, 1.0 - tail)};
}

double seed_value(const EcmFit &fit, const AlignedPanel &panel, SeedMode mode) {
    if (mode == SeedMode::fitted) {
        if (fit.taus.empty() || fit.taus.back() != panel.tau_len)
            throw FitError("no in-sample fitted value at the last observation");
        return fit.fitted_log(fit.fitted_log.size() - 1);
    }
    return panel.y(panel.tau_len - 1);
}

// Peer rows tau_len .. tau_len + horizon (1-based tau), restricted to the support.
Eigen::MatrixXd future_peers(const EcmFit &fit, const AlignedPanel &panel, int horizon) {
    const int s = static_cast<int>(fit.support.size());
    Eigen::MatrixXd out(horizon + 1, s);
    for (int k = 0; k <= horizon; ++k) {
        const int tau = panel.tau_len + k;
        for (int c = 0; c < s; ++c) {
            const int j = fit.support[static_cast<std::size_t>(c)];
            if (tau > panel.x.rows() || !std::isfinite(panel.x(tau - 1, j)))
                throw FitError("missing value for peer '" + panel.peer_names[static_cast<std::size_t>(j)] +
                               "' at tau " + std::to_string(tau));
            out(k, c) = panel.x(tau - 1, j);
        }
    }
    return out;
}

} // namespace

EcmFit fit_ecm(const AlignedPanel &panel, const LassoFit &lasso) {
    if (lasso.beta.size() != panel.peers())
        throw std::invalid_argument("fit_ecm: LASSO fit does not match the panel's peers");

    EcmFit fit;
    fit.window = panel.window;
    fit.long_run_intercept = lasso.intercept;
    if (lasso.support.empty()) {
        const int j = best_correlated_peer(panel);
        const Eigen::VectorXd y = panel.window_y();
        const Eigen::VectorXd xj = panel.window_x().col(j);
        const Eigen::VectorXd w = panel.window_weights();
        fit.fallback = true;
        fit.support = {j};
        fit.beta = Eigen::VectorXd::Constant(1, w.dot(xj.cwiseProduct(y)) / w.dot(xj.cwiseProduct(xj)));
        fit.long_run_intercept = 0.0;
        fit.warnings.push_back("empty LASSO support; fallback to gamma-only model on '" +
                               panel.peer_names[static_cast<std::size_t>(j)] + "'");
    } else {
        fit.support = lasso.support;
        fit.beta.resize(static_cast<Eigen::Index>(fit.support.size()));
        for (std::size_t c = 0; c < fit.support.size(); ++c)
            fit.beta(static_cast<Eigen::Index>(c)) = lasso.beta(fit.support[c]);
    }
    for (int j : fit.support)
        fit.support_names.push_back(panel.peer_names[static_cast<std::size_t>(j)]);

    const int s = static_cast<int>(fit.support.size());
    const int n_dx = fit.fallback ? 0 : s;
    const int cols = n_dx + 1;

    for (int tau = std::max(2, panel.window_begin() + 1); tau <= panel.tau_len; ++tau)
        fit.taus.push_back(tau);
    const int m = static_cast<int>(fit.taus.size());
    if (m < 1)
        throw FitError("ECM needs at least two target observations");

    Eigen::MatrixXd design(m, cols);
    Eigen::VectorXd dy(m);
    fit.row_weights.resize(m);
    for (int r = 0; r < m; ++r) {
        const int row = fit.taus[static_cast<std::size_t>(r)] - 1; // 0-based index of tau
        dy(r) = panel.y(row) - panel.y(row - 1);
        double long_run = fit.long_run_intercept;
        for (int c = 0; c < s; ++c) {
            const int j = fit.support[static_cast<std::size_t>(c)];
            if (c < n_dx)
                design(r, c) = panel.x(row, j) - panel.x(row - 1, j);
            long_run += panel.x(row - 1, j) * fit.beta(c);
        }
        design(r, n_dx) = panel.y(row - 1) - long_run;
        fit.row_weights(r) = panel.weights(row);
    }

    const Eigen::VectorXd sqrt_w = fit.row_weights.cwiseSqrt();
    const Eigen::MatrixXd a = design.array().colwise() * sqrt_w.array();
    const Eigen::VectorXd b = dy.cwiseProduct(sqrt_w);

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    qr.setThreshold(1e-10);
    const int rank = static_cast<int>(qr.rank());
    std::vector<int> kept;
    for (int i = 0; i < rank; ++i)
        kept.push_back(static_cast<int>(qr.colsPermutation().indices()(i)));
    std::sort(kept.begin(), kept.end());
    if (rank < cols) {
        std::string dropped;
        for (int c = 0; c < cols; ++c) {
            if (std::find(kept.begin(), kept.end(), c) != kept.end())
                continue;
            dropped += dropped.empty() ? "" : ", ";
            dropped += c < n_dx ? "d(" + fit.support_names[static_cast<std::size_t>(c)] + ")" : "z";
        }
        fit.warnings.push_back("rank-deficient ECM design; dropped " + dropped);
    }

    Eigen::VectorXd theta = Eigen::VectorXd::Zero(cols);
    if (!kept.empty()) {
        Eigen::MatrixXd reduced(m, static_cast<Eigen::Index>(kept.size()));
        for (std::size_t i = 0; i < kept.size(); ++i)
            reduced.col(static_cast<Eigen::Index>(i)) = a.col(kept[i]);
        const Eigen::VectorXd sol = reduced.colPivHouseholderQr().solve(b);
        for (std::size_t i = 0; i < kept.size(); ++i)
            theta(kept[i]) = sol(static_cast<Eigen::Index>(i));
    }
    fit.pi = Eigen::VectorXd::Zero(s);
    fit.pi.head(n_dx) = theta.head(n_dx);
    fit.gamma = theta(n_dx);
    fit.n_params = rank;

    fit.residuals_u = dy - design * theta;
    fit.fitted_log.resize(m);
    for (int r = 0; r < m; ++r)
        fit.fitted_log(r) = panel.y(fit.taus[static_cast<std::size_t>(r)] - 1) - fit.residuals_u(r);

    const double weighted_ms = fit.row_weights.dot(fit.residuals_u.cwiseProduct(fit.residuals_u)) /
                               fit.row_weights.sum();
    if (m > rank) {
        fit.sigma2 = weighted_ms * m / static_cast<double>(m - rank);
    } else {
        fit.sigma2 = weighted_ms;
        fit.warnings.push_back("no residual degrees of freedom; sigma2 is the uncorrected weighted mean square");
    }
    fit.alpha = fit.residuals_u.array().exp().mean();

    if (std::abs(1.0 + fit.gamma) > 1.0)
        fit.warnings.push_back("unstable error correction: 1 + gamma = " + std::to_string(1.0 + fit.gamma));
    return fit;
}

Eigen::VectorXd forecast_log(const EcmFit &fit, const AlignedPanel &panel, int horizon, SeedMode seed) {
    if (horizon < 1)
        throw std::invalid_argument("forecast horizon must be at least 1");
    const Eigen::MatrixXd future = future_peers(fit, panel, horizon);
    Eigen::VectorXd out(horizon);
    double previous = seed_value(fit, panel, seed);
    for (int h = 1; h <= horizon; ++h) {
        const double short_run = (future.row(h) - future.row(h - 1)).dot(fit.pi);
        const double long_run = fit.long_run_intercept + future.row(h - 1).dot(fit.beta);
        previous = short_run - fit.gamma * long_run + (1.0 + fit.gamma) * previous;
        out(h - 1) = previous;
    }
    return out;
}

Eigen::VectorXd forecast_levels(const EcmFit &fit, const Eigen::VectorXd &y_hat) {
    if (!(fit.alpha > 0.0) || !std::isfinite(fit.alpha))
        throw FitError("bias correction must be finite and positive");
    Eigen::VectorXd out(y_hat.size());
    for (Eigen::Index i = 0; i < y_hat.size(); ++i) {
        out(i) = fit.alpha * std::exp(y_hat(i));
        if (!std::isfinite(out(i)))
            throw FitError("level forecast overflows at log value " + std::to_string(y_hat(i)));
    }
    return out;
}

ForecastPath simulate_bands(const EcmFit &fit, const AlignedPanel &panel, int horizon, int n_sims,
                            std::uint64_t seed, double confidence, SeedMode seed_mode) {
    if (n_sims < 1000)
        throw std::invalid_argument("simulate_bands: n_sims must be at least 1000");
    if (!(confidence > 0.0 && confidence < 1.0))
        throw std::invalid_argument("simulate_bands: confidence must lie in (0, 1)");

    ForecastPath path;
    path.n_sims = n_sims;
    path.seed = seed;
    path.confidence = confidence;
    path.last_observed = std::exp(panel.y(panel.tau_len - 1));

    const Eigen::VectorXd y_hat = forecast_log(fit, panel, horizon, seed_mode);
    const Eigen::VectorXd level_hat = forecast_levels(fit, y_hat);
    const Eigen::MatrixXd future = future_peers(fit, panel, horizon);
    const double start = seed_value(fit, panel, seed_mode);
    const double sigma = std::sqrt(fit.sigma2);
    if (fit.sigma2 <= 0.0)
        path.warnings.push_back("sigma2 is zero; bands collapse to the point path");

    // drift[h] is everything in the recursion except the (1 + gamma) * previous term
    std::vector<double> drift(static_cast<std::size_t>(horizon));
    for (int h = 1; h <= horizon; ++h)
        drift[static_cast<std::size_t>(h - 1)] =
            (future.row(h) - future.row(h - 1)).dot(fit.pi) -
            fit.gamma * (fit.long_run_intercept + future.row(h - 1).dot(fit.beta));

    const auto n = static_cast<std::size_t>(n_sims);
    const auto hz = static_cast<std::size_t>(horizon);
    std::vector<double> levels(n * hz);
    auto run_paths = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                              static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i >> 32)};
            std::mt19937_64 gen(seq);
            std::normal_distribution<double> shock(0.0, 1.0);
            double previous = start;
            for (std::size_t h = 0; h < hz; ++h) {
                const double u = sigma > 0.0 ? sigma * shock(gen) : 0.0;
                previous = drift[h] + (1.0 + fit.gamma) * previous + u;
                levels[i * hz + h] = fit.alpha * std::exp(previous);
            }
        }
    };
    const std::size_t workers =
        std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, std::max<std::size_t>(1, n / 2000));
    if (workers == 1) {
        run_paths(0, n);
    } else {
        std::vector<std::jthread> pool;
        const std::size_t chunk = (n + workers - 1) / workers;
        for (std::size_t begin = 0; begin < n; begin += chunk)
            pool.emplace_back(run_paths, begin, std::min(n, begin + chunk));
    }

    std::vector<double> level(n), fresh(n), rate(n);
    for (std::size_t h = 0; h < hz; ++h) {
        for (std::size_t i = 0; i < n; ++i) {
            const double now = levels[i * hz + h];
            const double before = h == 0 ? path.last_observed : levels[i * hz + h - 1];
            level[i] = now;
            fresh[i] = now - before;
            rate[i] = now / before - 1.0;
        }
        double level_sum = 0.0;
        for (double v : level)
            level_sum += v;
        const Band lb = band_of(level, confidence);
        const Band nb = band_of(fresh, confidence);
        const Band rb = band_of(rate, confidence);

        const double point = level_hat(static_cast<Eigen::Index>(h));
        const double point_before = h == 0 ? path.last_observed : level_hat(static_cast<Eigen::Index>(h - 1));
        path.horizons.push_back(static_cast<int>(h + 1));
        path.dates.push_back(format_iso(panel.target_date(panel.tau_len + static_cast<int>(h) + 1)));
        path.y_hat.push_back(y_hat(static_cast<Eigen::Index>(h)));
        path.level_hat.push_back(point);
        path.lower.push_back(lb.lower);
        path.median.push_back(lb.median);
        path.mean.push_back(level_sum / static_cast<double>(n));
        path.upper.push_back(lb.upper);
        path.new_hat.push_back(point - point_before);
        path.new_lower.push_back(nb.lower);
        path.new_upper.push_back(nb.upper);
        path.rate_hat.push_back(point / point_before - 1.0);
        path.rate_lower.push_back(rb.lower);
        path.rate_upper.push_back(rb.upper);
    }
    return path;
}

} // namespace latecomer
