#include "ineqgp/constraints.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace ineqgp {

namespace {

constexpr double INF = std::numeric_limits<double>::infinity();

using Triplets = std::vector<Eigen::Triplet<double>>;

LinearConstraintSystem build(Eigen::Index q, Eigen::Index m, const Triplets& trips,
                             Eigen::VectorXd lower, Eigen::VectorXd upper,
                             std::vector<ConstraintTag> tags) {
    LinearConstraintSystem sys;
    sys.lambda.resize(q, m);
    sys.lambda.setFromTriplets(trips.begin(), trips.end());
    sys.lower = std::move(lower);
    sys.upper = std::move(upper);
    sys.tags = std::move(tags);
    sys.validate();
    return sys;
}

// Walks every 1D line of the grid along `dim`, handing the caller the flat
// indices of that line's knots in order.
template <typename F>
void for_each_line(const KnotGrid& grid, int dim, F&& f) {
    const int d = grid.dim();
    std::vector<int> idx(d, 0);
    std::vector<Eigen::Index> line(grid.dims[dim]);
    while (true) {
        for (int j = 0; j < grid.dims[dim]; ++j) {
            idx[dim] = j;
            line[j] = grid.flat_index(idx);
        }
        f(line);
        // advance the multi-index over the remaining dimensions
        int k = d - 1;
        for (; k >= 0; --k) {
            if (k == dim) continue;
            if (++idx[k] < grid.dims[k]) break;
            idx[k] = 0;
        }
        if (k < 0) break;
    }
}

}  // namespace

void LinearConstraintSystem::validate() const {
    if (lower.size() != rows() || upper.size() != rows() ||
        static_cast<Eigen::Index>(tags.size()) != rows())
        throw std::invalid_argument("constraint system: inconsistent row metadata");
    for (Eigen::Index i = 0; i < rows(); ++i) {
        if (std::isnan(lower[i]) || std::isnan(upper[i]))
            throw std::invalid_argument("constraint system: NaN bound");
        if (!(lower[i] <= upper[i]))
            throw std::invalid_argument("constraint system: empty row interval (lower > upper)");
        if (lower[i] == -INF && upper[i] == INF)
            throw std::invalid_argument("constraint system: row constrains nothing");
    }
}

LinearConstraintSystem bounds(const KnotGrid& grid, double l, double u) {
    grid.validate();
    if (!(l < u)) throw std::invalid_argument("bounds: need l < u");
    const Eigen::Index m = grid.total_knots();
    Triplets trips;
    trips.reserve(m);
    for (Eigen::Index j = 0; j < m; ++j) trips.emplace_back(j, j, 1.0);
    return build(m, m, trips, Eigen::VectorXd::Constant(m, l), Eigen::VectorXd::Constant(m, u),
                 std::vector<ConstraintTag>(m, {ConstraintKind::Bound, -1}));
}

LinearConstraintSystem monotone(const KnotGrid& grid, int dim, bool increasing) {
    grid.validate();
    if (dim < 0 || dim >= grid.dim()) throw std::invalid_argument("monotone: dimension out of range");
    const Eigen::Index m = grid.total_knots();
    Triplets trips;
    Eigen::Index row = 0;
    for_each_line(grid, dim, [&](const std::vector<Eigen::Index>& line) {
        for (std::size_t j = 0; j + 1 < line.size(); ++j) {
            trips.emplace_back(row, line[j + 1], 1.0);
            trips.emplace_back(row, line[j], -1.0);
            ++row;
        }
    });
    Eigen::VectorXd lo = increasing ? Eigen::VectorXd::Zero(row) : Eigen::VectorXd::Constant(row, -INF);
    Eigen::VectorXd hi = increasing ? Eigen::VectorXd::Constant(row, INF) : Eigen::VectorXd::Zero(row);
    return build(row, m, trips, lo, hi, std::vector<ConstraintTag>(row, {ConstraintKind::Monotone, dim}));
}

LinearConstraintSystem convex(const KnotGrid& grid, int dim) {
    grid.validate();
    if (dim < 0 || dim >= grid.dim()) throw std::invalid_argument("convex: dimension out of range");
    if (grid.dims[dim] < 3)
        throw std::invalid_argument("convex: need at least three knots along the dimension");
    const Eigen::Index m = grid.total_knots();
    Triplets trips;
    Eigen::Index row = 0;
    for_each_line(grid, dim, [&](const std::vector<Eigen::Index>& line) {
        for (std::size_t j = 1; j + 1 < line.size(); ++j) {
            trips.emplace_back(row, line[j + 1], 1.0);
            trips.emplace_back(row, line[j], -2.0);
            trips.emplace_back(row, line[j - 1], 1.0);
            ++row;
        }
    });
    return build(row, m, trips, Eigen::VectorXd::Zero(row), Eigen::VectorXd::Constant(row, INF),
                 std::vector<ConstraintTag>(row, {ConstraintKind::Convex, dim}));
}

LinearConstraintSystem compose(const std::vector<LinearConstraintSystem>& systems) {
    if (systems.empty()) throw std::invalid_argument("compose: no systems given");
    const Eigen::Index m = systems.front().cols();
    for (const auto& s : systems) {
        s.validate();
        if (s.cols() != m) throw std::invalid_argument("compose: systems disagree on knot count");
    }

    // signature -> output row, so textually identical rows merge by interval intersection
    std::map<std::vector<std::pair<int, double>>, Eigen::Index> seen;
    Triplets trips;
    std::vector<double> lo, hi;
    std::vector<ConstraintTag> tags;
    for (const auto& s : systems) {
        for (Eigen::Index r = 0; r < s.rows(); ++r) {
            std::vector<std::pair<int, double>> sig;
            for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(s.lambda, r); it; ++it)
                if (it.value() != 0.0) sig.emplace_back(static_cast<int>(it.col()), it.value());
            auto [pos, inserted] = seen.try_emplace(sig, static_cast<Eigen::Index>(lo.size()));
            if (inserted) {
                for (const auto& [c, v] : sig) trips.emplace_back(pos->second, c, v);
                lo.push_back(s.lower[r]);
                hi.push_back(s.upper[r]);
                tags.push_back(s.tags[r]);
            } else {
                lo[pos->second] = std::max(lo[pos->second], s.lower[r]);
                hi[pos->second] = std::min(hi[pos->second], s.upper[r]);
                if (!(lo[pos->second] <= hi[pos->second]))
                    throw std::invalid_argument("compose: contradictory rows (empty interval)");
            }
        }
    }
    const Eigen::Index q = static_cast<Eigen::Index>(lo.size());
    return build(q, m, trips, Eigen::Map<Eigen::VectorXd>(lo.data(), q),
                 Eigen::Map<Eigen::VectorXd>(hi.data(), q), std::move(tags));
}

LinearConstraintSystem minimal_monotone_bounds(const KnotGrid& grid, double l, double u,
                                               bool increasing) {
    grid.validate();
    if (grid.dim() != 1)
        throw std::invalid_argument("minimal_monotone_bounds: only defined for 1D grids");
    if (!(l < u)) throw std::invalid_argument("minimal_monotone_bounds: need l < u");
    const Eigen::Index m = grid.total_knots();
    const Eigen::Index q = m + 1;
    Triplets trips;
    Eigen::VectorXd lo(q), hi(q);
    std::vector<ConstraintTag> tags;
    tags.reserve(q);

    // With monotone knot values only the two extreme knots need bound rows.
    trips.emplace_back(0, 0, 1.0);
    lo[0] = increasing ? l : -INF;
    hi[0] = increasing ? INF : u;
    tags.push_back({ConstraintKind::Bound, -1});
    for (Eigen::Index j = 0; j + 1 < m; ++j) {
        trips.emplace_back(j + 1, j + 1, 1.0);
        trips.emplace_back(j + 1, j, -1.0);
        lo[j + 1] = increasing ? 0.0 : -INF;
        hi[j + 1] = increasing ? INF : 0.0;
        tags.push_back({ConstraintKind::Monotone, 0});
    }
    trips.emplace_back(m, m - 1, 1.0);
    lo[m] = increasing ? -INF : l;
    hi[m] = increasing ? u : INF;
    tags.push_back({ConstraintKind::Bound, -1});
    return build(q, m, trips, lo, hi, std::move(tags));
}

std::vector<ConstraintViolation> check_feasible(const LinearConstraintSystem& sys,
                                                const Eigen::VectorXd& xi, double tol) {
    sys.validate();
    if (xi.size() != sys.cols()) throw std::invalid_argument("check_feasible: xi has wrong length");
    const Eigen::VectorXd vals = sys.lambda * xi;
    std::vector<ConstraintViolation> out;
    for (Eigen::Index i = 0; i < sys.rows(); ++i)
        if (vals[i] < sys.lower[i] - tol || vals[i] > sys.upper[i] + tol)
            out.push_back({i, vals[i], sys.lower[i], sys.upper[i]});
    return out;
}

bool is_feasible(const LinearConstraintSystem& sys, const Eigen::VectorXd& xi, double tol) {
    return check_feasible(sys, xi, tol).empty();
}

Eigen::Index constraint_rank(const LinearConstraintSystem& sys) {
    Eigen::MatrixXd dense(sys.lambda);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(dense);
    qr.setThreshold(1e-10);
    return qr.rank();
}

}  // namespace ineqgp
