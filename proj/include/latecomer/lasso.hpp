#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace latecomer {

/// Solver controls for the weighted LASSO.
struct LassoConfig {
    int n_lambdas = 100;
    double lambda_min_ratio = 1e-4;
    double tol = 1e-8; // on the largest coefficient update per sweep
    int max_iter = 10000;
    bool standardize = true;
    bool intercept = false;

    void validate() const;
};

/// sign(z) * max(|z| - gamma, 0)
double soft_threshold(double z, double gamma);

struct LassoSolution {
    Eigen::VectorXd beta;   // original column scale
    double intercept = 0.0; // zero unless config.intercept
    int iterations = 0;
};

/// Minimises (1/K) sum_t w_t (y_t - b0 - x_t' beta)^2 + lambda * sum_j s_j |beta_j|
/// by cyclic coordinate descent on the weighted Gram matrix. s_j is the column's
/// weighted scale when standardizing and 1 otherwise. Columns with zero weighted
/// scale stay at zero. `warm_start` (original scale) seeds the iterate.
LassoSolution fit_lasso(const Eigen::VectorXd &y, const Eigen::MatrixXd &x, const Eigen::VectorXd &weights,
                        double lambda, const LassoConfig &config, const Eigen::VectorXd *warm_start = nullptr);

/// Smallest penalty with an all-zero solution.
double lambda_max(const Eigen::VectorXd &y, const Eigen::MatrixXd &x, const Eigen::VectorXd &weights,
                  const LassoConfig &config);

/// Geometric grid of n_lambdas values from lambda_max down to lambda_max * lambda_min_ratio.
std::vector<double> lambda_path(const Eigen::VectorXd &y, const Eigen::MatrixXd &x, const Eigen::VectorXd &weights,
                                const LassoConfig &config);

/// K ln(RSS_w / K) + df ln K with K the row count. Returns -infinity for a perfect fit.
double bic(const Eigen::VectorXd &y, const Eigen::MatrixXd &x, const Eigen::VectorXd &weights,
           const Eigen::VectorXd &beta, double intercept = 0.0, bool count_intercept = false);

/// Same criterion from residuals and support size.
double bic_from_residuals(const Eigen::VectorXd &residuals, const Eigen::VectorXd &weights, int df);

struct PathPoint {
    double lambda;
    Eigen::VectorXd beta;
    double intercept;
    double bic;
};

/// Index of the smallest BIC; the first (largest lambda) wins ties.
std::size_t pick_min_bic(const std::vector<PathPoint> &path);

struct LassoFit {
    Eigen::VectorXd beta;
    double intercept = 0.0;
    bool has_intercept = false;
    std::vector<int> support;
    double lambda = 0.0;
    double bic = 0.0;
    Eigen::VectorXd residuals; // unweighted y - b0 - X beta over the estimation rows
    std::vector<PathPoint> path;
    std::vector<std::string> warnings;
};

/// Fits the whole path with warm starts and keeps the BIC-minimal point.
LassoFit select_by_bic(const Eigen::VectorXd &y, const Eigen::MatrixXd &x, const Eigen::VectorXd &weights,
                       const LassoConfig &config);

} // namespace latecomer
