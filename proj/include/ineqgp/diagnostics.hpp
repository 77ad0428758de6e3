#pragma once

#include <Eigen/Dense>

namespace ineqgp {

// Effective sample size of one scalar MCMC series: n / (1 + 2 sum rho_k) with
// the autocorrelation sum truncated by the initial monotone convex pair-sum
// rule. Result is clamped into [1, n]. A constant series reports n and sets
// *degenerate when given.
double ess(const Eigen::VectorXd& series, bool* degenerate = nullptr);

struct EssReport {
    Eigen::VectorXd per_coordinate;
    double q10 = 0.0, q50 = 0.0, q90 = 0.0;
    double wall_seconds = 0.0;
    double tn_ess = 0.0;  // q10 per second of sampling time
};

// Per-coordinate ESS over the rows of `draws` plus summary quantiles.
EssReport ess_report(const Eigen::MatrixXd& draws, double wall_seconds);

// Predictivity: 1 - mean((pred - truth)^2) / var(truth). Errors on constant truth.
double q2(const Eigen::VectorXd& truth, const Eigen::VectorXd& pred);

// Type-7 (linear interpolation) sample quantile.
double quantile(const Eigen::VectorXd& values, double p);

}  // namespace ineqgp
