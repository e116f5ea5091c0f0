#include "latecomer/lasso.hpp"

#include "latecomer/errors.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

namespace latecomer {

void LassoConfig::validate() const {
    if (!(tol > 0.0))
        throw std::invalid_argument("lasso tol must be positive");
    if (n_lambdas < 2)
        throw std::invalid_argument("lasso needs at least two penalty values");
    if (!(lambda_min_ratio > 0.0 && lambda_min_ratio < 1.0))
        throw std::invalid_argument("lambda_min_ratio must lie in (0, 1)");
    if (max_iter < 1)
        throw std::invalid_argument("max_iter must be positive");
}

double soft_threshold(double z, double gamma) {
    if (gamma < 0.0)
        throw std::invalid_argument("soft_threshold: negative threshold");
    if (z > gamma)
        return z - gamma;
    if (z < -gamma)
        return z + gamma;
    return 0.0;
}

namespace {

// The problem in working coordinates b = s .* beta, where the loss reads
// yy - 2 c'b + b'G b.
struct WorkingProblem {
    Eigen::MatrixXd gram;
    Eigen::VectorXd xty;
    Eigen::VectorXd scale; // 0 marks a degenerate column
    Eigen::VectorXd x_mean;
    double y_mean = 0.0;
    double yy = 0.0;
    std::vector<int> active;
};

void check_inputs(const Eigen::VectorXd &y, const Eigen::MatrixXd &x, const Eigen::VectorXd &weights) {
    if (x.rows() != y.size() || weights.size() != y.size())
        throw std::invalid_argument("lasso: dimension mismatch between y, X and weights");
    if (y.size() == 0 || x.cols() == 0)
        throw std::invalid_argument("lasso: empty problem");
    if ((weights.array() <= 0.0).any() || !weights.allFinite())
        throw std::invalid_argument("lasso: weights must be positive and finite");
    if (!y.allFinite() || !x.allFinite())
        throw std::invalid_argument("lasso: non-finite data");
}

WorkingProblem prepare(const Eigen::VectorXd &y, const Eigen::MatrixXd &x, const Eigen::VectorXd &weights,
                       const LassoConfig &config) {
    check_inputs(y, x, weights);
    const double k = static_cast<double>(y.size());
    const Eigen::Index p = x.cols();

    WorkingProblem wp;
    wp.x_mean = Eigen::VectorXd::Zero(p);
    Eigen::MatrixXd xc = x;
    Eigen::VectorXd yc = y;
    if (config.intercept) {
        const double wsum = weights.sum();
        wp.x_mean = (x.transpose() * weights) / wsum;
        wp.y_mean = weights.dot(y) / wsum;
        xc.rowwise() -= wp.x_mean.transpose();
        yc.array() -= wp.y_mean;
    }

    const Eigen::VectorXd second_moment = (xc.array().square().colwise() * weights.array()).colwise().sum() / k;
    const double largest = second_moment.maxCoeff();
    wp.scale = Eigen::VectorXd::Zero(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        const bool degenerate = !(second_moment(j) > 1e-20 * std::max(largest, 1.0));
        if (degenerate)
            continue;
        wp.scale(j) = config.standardize ? std::sqrt(second_moment(j)) : 1.0;
        wp.active.push_back(static_cast<int>(j));
    }
    for (Eigen::Index j = 0; j < p; ++j)
        if (wp.scale(j) > 0.0)
            xc.col(j) /= wp.scale(j);
        else
            xc.col(j).setZero();

    const Eigen::MatrixXd xw = xc.array().colwise() * weights.array();
    wp.gram = xw.transpose() * xc / k;
    wp.xty = xw.transpose() * yc / k;
    wp.yy = weights.dot(yc.cwiseProduct(yc)) / k;
    return wp;
}

[[maybe_unused]] double working_objective(const WorkingProblem &wp, const Eigen::VectorXd &b, double lambda) {
    return wp.yy - 2.0 * wp.xty.dot(b) + b.dot(wp.gram * b) + lambda * b.lpNorm<1>();
}

double kkt_gap(const WorkingProblem &wp, const Eigen::VectorXd &b, double lambda) {
    const Eigen::VectorXd grad = -2.0 * (wp.xty - wp.gram * b);
    double gap = 0.0;
    for (int j : wp.active) {
        const double v = b(j) != 0.0 ? std::abs(grad(j) + lambda * (b(j) > 0 ? 1.0 : -1.0))
                                     : std::max(0.0, std::abs(grad(j)) - lambda);
        gap = std::max(gap, v);
    }
    return gap;
}

double working_lambda_max(const WorkingProblem &wp) {
    double m = 0.0;
    for (int j : wp.active)
        m = std::max(m, std::abs(wp.xty(j)));
    return 2.0 * m;
}

LassoSolution to_original(const WorkingProblem &wp, const Eigen::VectorXd &b, int iterations,
                          const LassoConfig &config) {
    LassoSolution sol;
    sol.beta = Eigen::VectorXd::Zero(b.size());
    for (int j : wp.active)
        sol.beta(j) = b(j) / wp.scale(j);
    sol.intercept = config.intercept ? wp.y_mean - wp.x_mean.dot(sol.beta) : 0.0;
    sol.iterations = iterations;
    return sol;
}

// Signed support encoded as +-(j + 1).
std::vector<int> sign_pattern(const WorkingProblem &wp, const Eigen::VectorXd &b) {
    std::vector<int> pattern;
    for (int j : wp.active)
        if (b(j) != 0.0)
            pattern.push_back(b(j) > 0.0 ? j + 1 : -(j + 1));
    return pattern;
}

double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// Feature-sign search: exact active-set iterations for the lasso, started from the
// coordinate-descent iterate. Each step solves the sign-constrained quadratic on the
// active set and line-searches towards it, so the objective strictly decreases and
// the search terminates. Returns nothing if the KKT conditions are not reached.
std::optional<Eigen::VectorXd> feature_sign(const WorkingProblem &wp, Eigen::VectorXd b, double lambda) {
    const double scale = std::max({1.0, lambda, wp.xty.cwiseAbs().maxCoeff()});
    const double tight = 1e-11 * scale;
    const int max_steps = 50 * static_cast<int>(wp.active.size()) + 50;
    double current = working_objective(wp, b, lambda);
    for (int step = 0; step < max_steps; ++step) {
        const Eigen::VectorXd grad = 2.0 * (wp.gram * b - wp.xty);
        bool nonzero_ok = true;
        for (int j : wp.active)
            if (b(j) != 0.0 && std::abs(grad(j) + lambda * sign_of(b(j))) > tight)
                nonzero_ok = false;

        std::vector<int> set;
        Eigen::VectorXd theta = b.unaryExpr([](double v) { return sign_of(v); });
        if (nonzero_ok) {
            int worst = -1;
            double worst_abs = lambda + tight;
            for (int j : wp.active)
                if (b(j) == 0.0 && std::abs(grad(j)) > worst_abs) {
                    worst = j;
                    worst_abs = std::abs(grad(j));
                }
            if (worst < 0)
                return b;
            theta(worst) = -sign_of(grad(worst));
        }
        for (int j : wp.active)
            if (theta(j) != 0.0)
                set.push_back(j);

        const auto n = static_cast<Eigen::Index>(set.size());
        Eigen::MatrixXd g(n, n);
        Eigen::VectorXd rhs(n);
        for (Eigen::Index r = 0; r < n; ++r) {
            rhs(r) = wp.xty(set[r]) - 0.5 * lambda * theta(set[r]);
            for (Eigen::Index c = 0; c < n; ++c)
                g(r, c) = wp.gram(set[r], set[c]);
        }

        // More active columns than the rank (p > K, or collinear peers). Along a null
        // direction of the block the sign-constrained objective is linear, so slide
        // downhill until a coefficient reaches zero and drop it.
        Eigen::FullPivLU<Eigen::MatrixXd> lu(g);
        lu.setThreshold(1e-10);
        if (lu.rank() < n) {
            Eigen::VectorXd v = lu.kernel().col(0);
            Eigen::Index entering = -1;
            for (Eigen::Index r = 0; r < n; ++r)
                if (b(set[r]) == 0.0)
                    entering = r;
            const bool flip = entering >= 0 ? v(entering) * theta(set[entering]) < 0.0 : rhs.dot(v) < 0.0;
            if (flip)
                v = -v;
            auto first_zero = [&](const Eigen::VectorXd &dir, double &t_out) {
                Eigen::Index hit = -1;
                for (Eigen::Index r = 0; r < n; ++r) {
                    const double from = b(set[r]);
                    if (from != 0.0 && from * dir(r) < 0.0 && (hit < 0 || -from / dir(r) < t_out)) {
                        hit = r;
                        t_out = -from / dir(r);
                    }
                }
                return hit;
            };
            double t = 0.0;
            Eigen::Index hit = first_zero(v, t);
            if (hit < 0 && entering < 0 && std::abs(rhs.dot(v)) <= tight)
                hit = first_zero(v = -v, t);
            if (hit < 0)
                return std::nullopt;
            Eigen::VectorXd moved = b;
            for (Eigen::Index r = 0; r < n; ++r)
                moved(set[r]) = r == hit ? 0.0 : b(set[r]) + t * v(r);
            const double value = working_objective(wp, moved, lambda);
            if (value > current + tight)
                return std::nullopt;
            b = moved;
            current = std::min(value, current);
            continue;
        }
        const Eigen::VectorXd target = lu.solve(rhs);
        if (!target.allFinite())
            return std::nullopt;

        // Candidates: the unconstrained point and every zero crossing on the way to it.
        Eigen::VectorXd from(n), best = b;
        for (Eigen::Index r = 0; r < n; ++r)
            from(r) = b(set[r]);
        std::vector<double> ts{1.0};
        for (Eigen::Index r = 0; r < n; ++r) {
            const double d = target(r) - from(r);
            if (d != 0.0) {
                const double t = -from(r) / d;
                if (t > 0.0 && t < 1.0)
                    ts.push_back(t);
            }
        }
        double best_value = current;
        for (double t : ts) {
            Eigen::VectorXd candidate = b;
            for (Eigen::Index r = 0; r < n; ++r) {
                const double d = target(r) - from(r);
                // the coordinate whose crossing defines t lands exactly on zero
                candidate(set[r]) = (t < 1.0 && d != 0.0 && -from(r) / d == t) ? 0.0 : from(r) + t * d;
            }
            const double value = working_objective(wp, candidate, lambda);
            if (value < best_value) {
                best_value = value;
                best = candidate;
            }
        }
        if (!(best_value < current))
            return std::nullopt;
        b = best;
        current = best_value;
    }
    return std::nullopt;
}

bool satisfies_kkt(const WorkingProblem &wp, const Eigen::VectorXd &b, double lambda) {
    return kkt_gap(wp, b, lambda) <= 1e-9 * std::max({1.0, lambda, wp.xty.cwiseAbs().maxCoeff()});
}

LassoSolution solve(const WorkingProblem &wp, double lambda, const LassoConfig &config,
                    const Eigen::VectorXd *warm_start) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
        throw std::invalid_argument("lasso: penalty must be finite and non-negative");
    const Eigen::Index p = wp.gram.rows();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(p);
    if (warm_start != nullptr) {
        if (warm_start->size() != p)
            throw std::invalid_argument("lasso: warm start has the wrong length");
        for (int j : wp.active)
            b(j) = (*warm_start)(j)*wp.scale(j);
    }
    if (wp.active.empty())
        return to_original(wp, b, 0, config);

    Eigen::VectorXd gb = wp.gram * b;
    const double half_lambda = 0.5 * lambda;
    std::vector<int> previous_pattern;
    int stable_sweeps = 0;
#ifndef NDEBUG
    double previous = working_objective(wp, b, lambda);
#endif
    for (int iter = 1; iter <= config.max_iter; ++iter) {
        double max_delta = 0.0;
        for (int j : wp.active) {
            const double old = b(j);
            const double gjj = wp.gram(j, j);
            const double rho = wp.xty(j) - gb(j) + gjj * old;
            const double updated = soft_threshold(rho, half_lambda) / gjj;
            if (updated != old) {
                b(j) = updated;
                gb += wp.gram.col(j) * (updated - old);
                max_delta = std::max(max_delta, std::abs(updated - old));
            }
        }
#ifndef NDEBUG
        const double current = working_objective(wp, b, lambda);
        assert(current <= previous + 1e-10 * std::max(1.0, std::abs(previous)));
        previous = current;
#endif
        // Coordinate descent crawls on nearly collinear columns; once the signed
        // support has settled, finish with the exact active-set search.
        const std::vector<int> pattern = sign_pattern(wp, b);
        stable_sweeps = pattern == previous_pattern ? stable_sweeps + 1 : 0;
        previous_pattern = pattern;
        if (max_delta < config.tol || stable_sweeps == 5) {
            if (auto exact = feature_sign(wp, b, lambda); exact && satisfies_kkt(wp, *exact, lambda))
                return to_original(wp, *exact, iter, config);
        }
        if (max_delta < config.tol)
            return to_original(wp, b, iter, config);
    }
    const auto last = to_original(wp, b, config.max_iter, config);
    throw ConvergenceError("lasso: no convergence after " + std::to_string(config.max_iter) + " sweeps",
                           std::vector<double>(last.beta.data(), last.beta.data() + last.beta.size()),
                           kkt_gap(wp, b, lambda), config.max_iter);
}

} // namespace

LassoSolution fit_lasso(const Eigen::VectorXd &y, const Eigen::MatrixXd &x, const Eigen::VectorXd &weights,
                        double lambda, const LassoConfig &config, const Eigen::VectorXd *warm_start) {
    config.validate();
    return solve(prepare(y, x, weights, config), lambda, config, warm_start);
}

double lambda_max(const Eigen::VectorXd &y, const Eigen::MatrixXd &x, const Eigen::VectorXd &weights,
                  const LassoConfig &config) {
    const auto wp = prepare(y, x, weights, config);
    if (wp.active.empty())
        throw FitError("lasso: every peer column is degenerate (all zero)");
    return working_lambda_max(wp);
}

std::vector<double> lambda_path(const Eigen::VectorXd &y, const Eigen::MatrixXd &x, const Eigen::VectorXd &weights,
                                const LassoConfig &config) {
    config.validate();
    const double top = lambda_max(y, x, weights, config);
    if (!(top > 0.0))
        throw FitError("lasso: response is orthogonal to every peer column");
    std::vector<double> path(static_cast<std::size_t>(config.n_lambdas));
    const double log_ratio = std::log(config.lambda_min_ratio);
    for (int k = 0; k < config.n_lambdas; ++k)
        path[static_cast<std::size_t>(k)] = top * std::exp(log_ratio * k / (config.n_lambdas - 1));
    path.front() = top;
    return path;
}

double bic_from_residuals(const Eigen::VectorXd &residuals, const Eigen::VectorXd &weights, int df) {
    if (residuals.size() != weights.size() || residuals.size() == 0)
        throw std::invalid_argument("bic: dimension mismatch");
    const double k = static_cast<double>(residuals.size());
    const double rss = weights.dot(residuals.cwiseProduct(residuals));
    if (rss <= 0.0)
        return -std::numeric_limits<double>::infinity();
    return k * std::log(rss / k) + df * std::log(k);
}

double bic(const Eigen::VectorXd &y, const Eigen::MatrixXd &x, const Eigen::VectorXd &weights,
           const Eigen::VectorXd &beta, double intercept, bool count_intercept) {
    if (x.rows() != y.size() || x.cols() != beta.size())
        throw std::invalid_argument("bic: dimension mismatch");
    const Eigen::VectorXd residuals = (y - x * beta).array() - intercept;
    const int df = static_cast<int>((beta.array() != 0.0).count()) + (count_intercept ? 1 : 0);
    return bic_from_residuals(residuals, weights, df);
}

std::size_t pick_min_bic(const std::vector<PathPoint> &path) {
    if (path.empty())
        throw std::invalid_argument("pick_min_bic: empty path");
    std::size_t best = 0;
    for (std::size_t i = 1; i < path.size(); ++i)
        if (path[i].bic < path[best].bic)
            best = i;
    return best;
}

LassoFit select_by_bic(const Eigen::VectorXd &y, const Eigen::MatrixXd &x, const Eigen::VectorXd &weights,
                       const LassoConfig &config) {
    config.validate();
    const auto wp = prepare(y, x, weights, config);
    const auto lambdas = lambda_path(y, x, weights, config);

    LassoFit fit;
    fit.has_intercept = config.intercept;
    fit.path.reserve(lambdas.size());
    Eigen::VectorXd warm = Eigen::VectorXd::Zero(x.cols());
    for (double lambda : lambdas) {
        const LassoSolution sol = solve(wp, lambda, config, &warm);
        warm = sol.beta;
        fit.path.push_back({lambda, sol.beta, sol.intercept, bic(y, x, weights, sol.beta, sol.intercept, config.intercept)});
    }
    const PathPoint &best = fit.path[pick_min_bic(fit.path)];
    fit.beta = best.beta;
    fit.intercept = best.intercept;
    fit.lambda = best.lambda;
    fit.bic = best.bic;
    for (Eigen::Index j = 0; j < fit.beta.size(); ++j)
        if (fit.beta(j) != 0.0)
            fit.support.push_back(static_cast<int>(j));
    fit.residuals = (y - x * fit.beta).array() - fit.intercept;
    if (std::isinf(fit.bic))
        fit.warnings.push_back("lasso: perfect in-sample fit, BIC is -inf");
    return fit;
}

} // namespace latecomer
