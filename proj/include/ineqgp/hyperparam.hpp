#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "ineqgp/kernel.hpp"
#include "ineqgp/knot_grid.hpp"
#include "ineqgp/posterior.hpp"

namespace ineqgp {

// Parameters pinned to a value instead of being estimated.
struct FixedParams {
    std::optional<double> variance;
    std::vector<std::optional<double>> lengthscales;  // empty means all free
    std::optional<double> tau2;                       // absolute noise variance
};

struct FitOptions {
    int starts = 10;       // multi-start count (space-filling in log space)
    int max_iters = 80;    // L-BFGS iterations per start
    double tol = 1e-7;     // relative objective decrease below which we stop
    std::uint64_t seed = 0x5eedULL;
};

struct FitResult {
    KernelSpec kernel;
    double tau2 = 0.0;
    double loglik = 0.0;  // log marginal likelihood at the optimum
    int best_start = -1;
    int evaluations = 0;  // objective/gradient calls across all starts
};

// Maximum likelihood estimation of kernel variance, per-dimension lengthscales
// and observation noise under the knot-approximated marginal y ~ N(0, Phi
// Gamma Phi^T + tau2 I). Optimization runs in log space with box projection
// and restarts from a stratified design; the best of the monotone descents is
// returned, so the reported loglik is never below any start's initial value.
FitResult fit_ml(KernelFamily family, const KnotGrid& grid, const SparseRowMat& phi,
                 const Eigen::VectorXd& y, const FixedParams& fixed = {},
                 const FitOptions& opts = {});

}  // namespace ineqgp
