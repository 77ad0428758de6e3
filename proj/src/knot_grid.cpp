#include "ineqgp/knot_grid.hpp"

#include <cmath>
#include <stdexcept>

namespace ineqgp {

namespace {

constexpr double COORD_EPS = 1e-12;

// Maps x to its grid cell and barycentric weight inside that cell.
// Accepts a hair of floating slack around [0,1] and clamps it away.
void locate(const KnotGrid& grid, int k, double x, int* cell, double* u) {
    if (x < -COORD_EPS || x > 1.0 + COORD_EPS)
        throw std::invalid_argument("knot grid: coordinate outside [0,1]");
    x = std::min(1.0, std::max(0.0, x));
    const int cells = grid.dims[k] - 1;
    int j = static_cast<int>(x * cells);
    if (j >= cells) j = cells - 1;
    *cell = j;
    *u = x * cells - j;
}

}  // namespace

Eigen::Index KnotGrid::total_knots() const {
    Eigen::Index m = 1;
    for (int d : dims) m *= d;
    return m;
}

Eigen::VectorXd KnotGrid::axis(int k) const {
    Eigen::VectorXd a(dims[k]);
    for (int j = 0; j < dims[k]; ++j) a[j] = knot(k, j);
    return a;
}

std::vector<Eigen::VectorXd> KnotGrid::axes() const {
    std::vector<Eigen::VectorXd> out;
    out.reserve(dims.size());
    for (int k = 0; k < dim(); ++k) out.push_back(axis(k));
    return out;
}

Eigen::Index KnotGrid::flat_index(const std::vector<int>& idx) const {
    if (idx.size() != dims.size()) throw std::invalid_argument("flat_index: wrong arity");
    Eigen::Index flat = 0;
    for (int k = 0; k < dim(); ++k) {
        if (idx[k] < 0 || idx[k] >= dims[k]) throw std::out_of_range("flat_index: index out of range");
        flat = flat * dims[k] + idx[k];
    }
    return flat;
}

std::vector<int> KnotGrid::unflatten(Eigen::Index flat) const {
    std::vector<int> idx(dims.size());
    for (int k = dim() - 1; k >= 0; --k) {
        idx[k] = static_cast<int>(flat % dims[k]);
        flat /= dims[k];
    }
    return idx;
}

Eigen::MatrixXd KnotGrid::flattened_points() const {
    const Eigen::Index m = total_knots();
    Eigen::MatrixXd pts(m, dim());
    for (Eigen::Index i = 0; i < m; ++i) {
        const std::vector<int> idx = unflatten(i);
        for (int k = 0; k < dim(); ++k) pts(i, k) = knot(k, idx[k]);
    }
    return pts;
}

void KnotGrid::validate() const {
    if (dims.empty()) throw std::invalid_argument("knot grid needs at least one dimension");
    for (int d : dims)
        if (d < 2) throw std::invalid_argument("knot grid needs at least two knots per dimension");
}

KnotGrid make_grid(std::vector<int> dims) {
    KnotGrid g{std::move(dims)};
    g.validate();
    return g;
}

double hat(const KnotGrid& grid, int dim, int j, double x) {
    if (dim < 0 || dim >= grid.dim()) throw std::out_of_range("hat: dimension out of range");
    if (j < 0 || j >= grid.dims[dim]) throw std::out_of_range("hat: knot index out of range");
    if (x < -COORD_EPS || x > 1.0 + COORD_EPS)
        throw std::invalid_argument("hat: coordinate outside [0,1]");
    const double ratio = std::abs(x - grid.knot(dim, j)) / grid.spacing(dim);
    return ratio <= 1.0 ? 1.0 - ratio : 0.0;
}

Eigen::SparseMatrix<double, Eigen::RowMajor> design_matrix(const KnotGrid& grid,
                                                           const Eigen::MatrixXd& pts) {
    grid.validate();
    const int d = grid.dim();
    if (pts.cols() != d) throw std::invalid_argument("design_matrix: point dimension mismatch");
    if (d > 20) throw std::invalid_argument("design_matrix: dimension too large");

    const Eigen::Index n = pts.rows();
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(n) << d);
    std::vector<int> cell(d);
    std::vector<double> w(d);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (int k = 0; k < d; ++k) locate(grid, k, pts(i, k), &cell[k], &w[k]);
        for (unsigned corner = 0; corner < (1u << d); ++corner) {
            double weight = 1.0;
            Eigen::Index flat = 0;
            for (int k = 0; k < d; ++k) {
                const bool hi = corner & (1u << k);
                weight *= hi ? w[k] : 1.0 - w[k];
                flat = flat * grid.dims[k] + cell[k] + (hi ? 1 : 0);
            }
            if (weight != 0.0) trips.emplace_back(i, flat, weight);
        }
    }
    Eigen::SparseMatrix<double, Eigen::RowMajor> phi(n, grid.total_knots());
    phi.setFromTriplets(trips.begin(), trips.end());
    return phi;
}

double evaluate(const KnotGrid& grid, const Eigen::VectorXd& xi, const Eigen::VectorXd& x) {
    const int d = grid.dim();
    if (xi.size() != grid.total_knots()) throw std::invalid_argument("evaluate: xi has wrong length");
    if (x.size() != d) throw std::invalid_argument("evaluate: point dimension mismatch");
    std::vector<int> cell(d);
    std::vector<double> w(d);
    for (int k = 0; k < d; ++k) locate(grid, k, x[k], &cell[k], &w[k]);
    double acc = 0.0;
    for (unsigned corner = 0; corner < (1u << d); ++corner) {
        double weight = 1.0;
        Eigen::Index flat = 0;
        for (int k = 0; k < d; ++k) {
            const bool hi = corner & (1u << k);
            weight *= hi ? w[k] : 1.0 - w[k];
            flat = flat * grid.dims[k] + cell[k] + (hi ? 1 : 0);
        }
        if (weight != 0.0) acc += weight * xi[flat];
    }
    return acc;
}

}  // namespace ineqgp
