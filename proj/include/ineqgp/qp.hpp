#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "ineqgp/constraints.hpp"
#include "ineqgp/posterior.hpp"

namespace ineqgp {

struct QpResult {
    Eigen::VectorXd mode;
    std::vector<int> active;            // active one-sided constraints, id = 2*row + (0 lower | 1 upper)
    std::vector<Eigen::Index> active_rows;
    double kkt_residual = 0.0;
    int iterations = 0;
};

// Maximum a posteriori knot values: minimizes (xi - mean)^T Sigma^-1 (xi - mean)
// over  lower <= lambda xi <= upper, via a dual active-set method (Goldfarb-Idnani).
// Sigma^-1 comes from the conditioned Gaussian's jittered Cholesky factor. Falls
// back to projected gradient when the factor's condition estimate exceeds 1e12.
// `warm` optionally seeds the scan order with a previous solve's active ids.
QpResult solve_map(const ConditionedGaussian& cg, const LinearConstraintSystem& sys,
                   const std::vector<int>* warm = nullptr);

// Certificate value (mean - mode)^T Sigma^-1 (z - mode); non-positive for every
// feasible z when `mode` is the constrained maximizer.
double variational_gap(const ConditionedGaussian& cg, const Eigen::VectorXd& mode,
                       const Eigen::VectorXd& z);

namespace detail {
// Projected-gradient path, exposed so the fallback can be exercised directly.
QpResult solve_map_projected_gradient(const ConditionedGaussian& cg,
                                      const LinearConstraintSystem& sys);
}

}  // namespace ineqgp
