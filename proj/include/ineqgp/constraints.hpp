#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <vector>

#include "ineqgp/knot_grid.hpp"

namespace ineqgp {

enum class ConstraintKind { Bound, Monotone, Convex };

struct ConstraintTag {
    ConstraintKind kind;
    int dim;  // -1 for kinds that do not attach to a dimension
};

// Row system  lower <= lambda * xi <= upper  over knot values xi.
// +-infinity entries mark one-sided rows.
struct LinearConstraintSystem {
    Eigen::SparseMatrix<double, Eigen::RowMajor> lambda;  // q x m
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
    std::vector<ConstraintTag> tags;

    Eigen::Index rows() const { return lambda.rows(); }
    Eigen::Index cols() const { return lambda.cols(); }
    void validate() const;
};

// Value bounds l <= xi_j <= u at every knot (identity rows).
LinearConstraintSystem bounds(const KnotGrid& grid, double l, double u);

// Monotonicity along `dim`: consecutive knot differences along that axis are
// >= 0 when increasing, <= 0 otherwise.
LinearConstraintSystem monotone(const KnotGrid& grid, int dim, bool increasing);

// Convexity along `dim`: second differences along that axis are >= 0.
LinearConstraintSystem convex(const KnotGrid& grid, int dim);

// Stacks systems in order. Rows with identical coefficients are merged by
// intersecting their intervals; an empty intersection is an error.
LinearConstraintSystem compose(const std::vector<LinearConstraintSystem>& systems);

// Minimal q = m+1 form of bounds + monotonicity for 1D grids: one bound row on
// the first knot, difference rows, one bound row on the last knot. Equivalent
// to the full stacked system but with no redundant rows.
LinearConstraintSystem minimal_monotone_bounds(const KnotGrid& grid, double l, double u,
                                               bool increasing);

struct ConstraintViolation {
    Eigen::Index row;
    double value;
    double lower;
    double upper;
};

// Rows whose value falls outside [lower - tol, upper + tol].
std::vector<ConstraintViolation> check_feasible(const LinearConstraintSystem& sys,
                                                const Eigen::VectorXd& xi, double tol = 1e-8);

bool is_feasible(const LinearConstraintSystem& sys, const Eigen::VectorXd& xi, double tol = 1e-8);

// Numerical rank of lambda (dense rank-revealing QR).
Eigen::Index constraint_rank(const LinearConstraintSystem& sys);

}  // namespace ineqgp
