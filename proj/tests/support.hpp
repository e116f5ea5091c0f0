#pragma once

#include "latecomer/align.hpp"
#include "latecomer/date.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace latecomer::testing {

inline std::string fixture_path(const std::string &name) { return std::string(LATECOMER_FIXTURE_DIR) + "/" + name; }

inline std::string read_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline Eigen::VectorXd normals(std::mt19937_64 &rng, Eigen::Index n, double sd = 1.0) {
    std::normal_distribution<double> dist(0.0, sd);
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i)
        v(i) = dist(rng);
    return v;
}

inline Eigen::MatrixXd normal_matrix(std::mt19937_64 &rng, Eigen::Index rows, Eigen::Index cols) {
    std::normal_distribution<double> dist(0.0, 1.0);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i)
            m(i, j) = dist(rng);
    return m;
}

/// Known error-correction generator:
///   dy_t = dx_t' pi + gamma * (y_{t-1} - b0 - x_{t-1}' beta) + sigma * e_t
struct EcmTruth {
    Eigen::VectorXd pi;
    Eigen::VectorXd beta;
    double gamma = -0.5;
    double intercept = 0.0;
    double sigma = 0.01;
};

struct SimulatedPanel {
    Eigen::VectorXd y; // n + horizon values; the tail is the realised future
    Eigen::MatrixXd x; // (n + horizon) x p
};

/// Peers are random walks with drift `x_drift` and step sd `x_sd` starting at `x0`.
/// The target starts `z0` above its long-run level.
inline SimulatedPanel simulate_ecm(const EcmTruth &truth, int n, int horizon, std::mt19937_64 &rng,
                                   double x_drift = 0.05, double x_sd = 0.1, double x0 = 6.0, double z0 = 0.0) {
    const auto p = truth.beta.size();
    const int total = n + horizon;
    SimulatedPanel out{Eigen::VectorXd(total), Eigen::MatrixXd(total, p)};
    std::normal_distribution<double> dist(0.0, 1.0);
    for (Eigen::Index j = 0; j < p; ++j)
        out.x(0, j) = x0 + 0.5 * static_cast<double>(j);
    for (int t = 1; t < total; ++t)
        for (Eigen::Index j = 0; j < p; ++j)
            out.x(t, j) = out.x(t - 1, j) + x_drift + x_sd * dist(rng);
    out.y(0) = truth.intercept + out.x.row(0).dot(truth.beta) + z0;
    for (int t = 1; t < total; ++t) {
        const double z = out.y(t - 1) - truth.intercept - out.x.row(t - 1).dot(truth.beta);
        const double dy = (out.x.row(t) - out.x.row(t - 1)).dot(truth.pi) + truth.gamma * z + truth.sigma * dist(rng);
        out.y(t) = out.y(t - 1) + dy;
    }
    return out;
}

/// Panel over the first `n` target values with peers extending `horizon` rows further.
inline AlignedPanel make_panel(const Eigen::VectorXd &y, const Eigen::MatrixXd &x, int n, int window,
                               const Eigen::VectorXd *weights = nullptr) {
    AlignedPanel panel;
    panel.target_name = "target";
    for (Eigen::Index j = 0; j < x.cols(); ++j)
        panel.peer_names.push_back("peer" + std::to_string(j));
    panel.tau_len = n;
    panel.window = window;
    panel.max_horizon = static_cast<int>(x.rows()) - n;
    panel.target_start = parse_iso_date("2020-03-01");
    for (Eigen::Index j = 0; j < x.cols(); ++j)
        panel.peer_starts.push_back(parse_iso_date("2020-02-01"));
    panel.y = y.head(n);
    panel.x = x;
    if (weights) {
        panel.weights = *weights;
    } else {
        panel.weights = Eigen::VectorXd::Ones(n);
        panel.weights.tail(window) = inflation_weights(window);
    }
    return panel;
}

/// Calendar series whose log counts are `logs`, preceded by `lead` days below `threshold`.
inline CountrySeries series_from_logs(const std::string &name, Date first_at_threshold, const std::vector<double> &logs,
                                      int lead = 3, std::int64_t threshold = 100) {
    CountrySeries s;
    s.name = name;
    for (int i = lead; i >= 1; --i) {
        s.dates.push_back(add_days(first_at_threshold, -i));
        s.counts.push_back(threshold * (lead - i + 1) / (lead + 2));
    }
    for (std::size_t i = 0; i < logs.size(); ++i) {
        s.dates.push_back(add_days(first_at_threshold, static_cast<int>(i)));
        s.counts.push_back(static_cast<std::int64_t>(std::llround(std::exp(logs[i]))));
    }
    return s;
}

/// Target and peers on the calendar, generated in tau time from a known ECM.
/// Peers reach the threshold `lead_days` before the target and extend to the
/// target's last date, so every peer value the model needs is dated on or before
/// the origin when lead_days >= horizon.
struct SyntheticWorld {
    CountrySeries target;
    std::vector<CountrySeries> peers;
};

inline SyntheticWorld synthetic_world(const EcmTruth &truth, int target_days, int lead_days, std::uint64_t seed,
                                      double x_drift = 0.08, double x_sd = 0.03) {
    std::mt19937_64 rng(seed);
    const auto sim = simulate_ecm(truth, target_days, lead_days, rng, x_drift, x_sd, 5.0);
    const Date target_start = parse_iso_date("2020-03-10");
    SyntheticWorld world;
    world.target =
        series_from_logs("Target", target_start, std::vector<double>(sim.y.data(), sim.y.data() + target_days));
    for (Eigen::Index j = 0; j < sim.x.cols(); ++j) {
        const Eigen::VectorXd col = sim.x.col(j);
        world.peers.push_back(series_from_logs("Peer" + std::string(1, static_cast<char>('A' + j)),
                                               add_days(target_start, -lead_days),
                                               std::vector<double>(col.data(), col.data() + col.size())));
    }
    return world;
}

} // namespace latecomer::testing
