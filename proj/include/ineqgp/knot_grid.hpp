#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <vector>

namespace ineqgp {

// Equispaced tensor grid of hat-function knots on [0,1]^d. Along dimension k
// there are dims[k] knots at j / (dims[k]-1). Multi-indices are flattened
// row-major, i.e. the last dimension varies fastest.
struct KnotGrid {
    std::vector<int> dims;

    int dim() const { return static_cast<int>(dims.size()); }
    Eigen::Index total_knots() const;
    double spacing(int k) const { return 1.0 / (dims[k] - 1); }
    double knot(int k, int j) const { return j * spacing(k); }
    Eigen::VectorXd axis(int k) const;
    std::vector<Eigen::VectorXd> axes() const;
    Eigen::Index flat_index(const std::vector<int>& idx) const;
    std::vector<int> unflatten(Eigen::Index flat) const;
    Eigen::MatrixXd flattened_points() const;  // total_knots x dim
    void validate() const;
};

KnotGrid make_grid(std::vector<int> dims);

// Hat function of knot j (0-based) along `dim`, evaluated at scalar x in [0,1]:
// max(0, 1 - |x - t_j| / spacing). Knots form a partition of unity.
double hat(const KnotGrid& grid, int dim, int j, double x);

// n x total_knots matrix of hat-basis weights, one row per evaluation point.
// At most 2^d nonzeros per row; each row sums to one.
Eigen::SparseMatrix<double, Eigen::RowMajor> design_matrix(const KnotGrid& grid,
                                                           const Eigen::MatrixXd& pts);

// Piecewise-linear interpolant with knot values `xi` evaluated at a single point.
double evaluate(const KnotGrid& grid, const Eigen::VectorXd& xi, const Eigen::VectorXd& x);

}  // namespace ineqgp
