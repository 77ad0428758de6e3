#include "ineqgp/qp.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace ineqgp {

namespace {

constexpr double INF = std::numeric_limits<double>::infinity();

// One-sided rows n^T x >= b extracted from the two-sided system.
struct OneSided {
    Eigen::MatrixXd normals;       // m x nc
    Eigen::VectorXd b;             // nc
    std::vector<int> ids;          // 2*row + (0 lower | 1 upper)
};

OneSided split_rows(const LinearConstraintSystem& sys) {
    const Eigen::Index m = sys.cols();
    std::vector<Eigen::VectorXd> cols;
    OneSided out;
    for (Eigen::Index r = 0; r < sys.rows(); ++r) {
        Eigen::VectorXd row = Eigen::VectorXd::Zero(m);
        for (SparseRowMat::InnerIterator it(sys.lambda, r); it; ++it) row[it.col()] = it.value();
        if (sys.lower[r] > -INF) {
            cols.push_back(row);
            out.ids.push_back(static_cast<int>(2 * r));
        }
        if (sys.upper[r] < INF) {
            cols.push_back(-row);
            out.ids.push_back(static_cast<int>(2 * r + 1));
        }
    }
    out.normals.resize(m, static_cast<Eigen::Index>(cols.size()));
    out.b.resize(static_cast<Eigen::Index>(cols.size()));
    Eigen::Index j = 0;
    for (Eigen::Index r = 0; r < sys.rows(); ++r) {
        if (sys.lower[r] > -INF) out.b[j] = sys.lower[r], out.normals.col(j) = cols[j], ++j;
        if (sys.upper[r] < INF) out.b[j] = -sys.upper[r], out.normals.col(j) = cols[j], ++j;
    }
    return out;
}

// Applies Sigma^-1 through the stored jittered Cholesky factor.
Eigen::VectorXd apply_precision(const Eigen::MatrixXd& chol, const Eigen::VectorXd& v) {
    Eigen::VectorXd w = chol.triangularView<Eigen::Lower>().solve(v);
    return chol.transpose().triangularView<Eigen::Upper>().solve(w);
}

// Givens rotation zeroing the second component; returns {c, s, h} with
// c*a + s*b = h >= 0 and -s*a + c*b = 0.
struct Givens {
    double c, s, h;
};

Givens make_givens(double a, double b) {
    const double h = std::hypot(a, b);
    if (h == 0.0) return {1.0, 0.0, 0.0};
    double c = a / h, s = b / h;
    return {c, s, h};
}

double kkt_residual_of(const ConditionedGaussian& cg, const OneSided& cons,
                       const Eigen::VectorXd& x, const std::vector<int>& active_pos,
                       const Eigen::VectorXd& duals) {
    Eigen::VectorXd grad = apply_precision(cg.chol, x - cg.mean);
    for (std::size_t i = 0; i < active_pos.size(); ++i)
        grad -= duals[static_cast<Eigen::Index>(i)] * cons.normals.col(active_pos[i]);
    const double gscale = 1.0 + apply_precision(cg.chol, cg.mean).cwiseAbs().maxCoeff();
    double res = grad.cwiseAbs().maxCoeff() / gscale;
    for (Eigen::Index k = 0; k < cons.b.size(); ++k) {
        const double s = cons.normals.col(k).dot(x) - cons.b[k];
        res = std::max(res, -s / (1.0 + std::abs(cons.b[k])));
    }
    for (std::size_t i = 0; i < active_pos.size(); ++i) {
        const int k = active_pos[i];
        const double s = cons.normals.col(k).dot(x) - cons.b[k];
        res = std::max(res, std::abs(duals[static_cast<Eigen::Index>(i)] * s) /
                                (1.0 + std::abs(cons.b[k])));
    }
    return res;
}

std::vector<Eigen::Index> rows_of(const std::vector<int>& ids) {
    std::vector<Eigen::Index> rows;
    rows.reserve(ids.size());
    for (int id : ids) rows.push_back(id / 2);
    return rows;
}

}  // namespace

QpResult solve_map(const ConditionedGaussian& cg, const LinearConstraintSystem& sys,
                   const std::vector<int>* warm) {
    sys.validate();
    if (sys.cols() != cg.size()) throw std::invalid_argument("solve_map: size mismatch");

    // condition estimate of the covariance factor; a hopeless factor routes to
    // the gradient fallback which avoids triangular solves against it
    const auto diag = cg.chol.diagonal();
    const double dmax = diag.maxCoeff(), dmin = diag.minCoeff();
    if (!(dmin > 0.0) || (dmax / dmin) * (dmax / dmin) > 1e12)
        return detail::solve_map_projected_gradient(cg, sys);

    const Eigen::Index m = cg.size();
    const OneSided cons = split_rows(sys);
    const Eigen::Index nc = cons.b.size();

    // Goldfarb-Idnani dual active set. J J^T = Sigma + jitter I holds throughout;
    // R is the triangular factor of the active normals in J coordinates.
    Eigen::MatrixXd j_mat = cg.chol;
    Eigen::MatrixXd r_mat = Eigen::MatrixXd::Zero(m, m);
    Eigen::VectorXd x = cg.mean;
    Eigen::VectorXd u = Eigen::VectorXd::Zero(m + 1);
    std::vector<int> active_pos;  // column indices into cons.normals
    Eigen::Index p = 0;
    int iterations = 0;
    const int max_iter = 100 * static_cast<int>(m + nc) + 100;
    double r_norm = 1.0;

    // scan order: warm-start hints first, then everything
    std::vector<int> order;
    order.reserve(nc);
    if (warm) {
        for (int id : *warm)
            for (Eigen::Index k = 0; k < nc; ++k)
                if (cons.ids[k] == id) order.push_back(static_cast<int>(k));
    }
    for (Eigen::Index k = 0; k < nc; ++k) order.push_back(static_cast<int>(k));

    auto is_active = [&](int k) {
        for (int a : active_pos)
            if (a == k) return true;
        return false;
    };

    auto add_constraint = [&](Eigen::VectorXd& d) -> bool {
        for (Eigen::Index jj = m - 1; jj >= p + 1; --jj) {
            const Givens g = make_givens(d[jj - 1], d[jj]);
            if (g.h == 0.0) continue;
            d[jj - 1] = (g.c < 0.0) ? -g.h : g.h;
            d[jj] = 0.0;
            const double cc = (g.c < 0.0) ? -g.c : g.c;
            const double ss = (g.c < 0.0) ? -g.s : g.s;
            for (Eigen::Index k = 0; k < m; ++k) {
                const double t1 = j_mat(k, jj - 1), t2 = j_mat(k, jj);
                j_mat(k, jj - 1) = t1 * cc + t2 * ss;
                j_mat(k, jj) = -t1 * ss + t2 * cc;
            }
        }
        if (std::abs(d[p]) <= 1e-14 * r_norm) return false;  // linearly dependent normal
        ++p;
        r_mat.col(p - 1).head(p) = d.head(p);
        r_norm = std::max(r_norm, std::abs(d[p - 1]));
        return true;
    };

    auto delete_constraint = [&](Eigen::Index qq) {
        active_pos.erase(active_pos.begin() + qq);
        for (Eigen::Index i = qq; i + 1 < p; ++i) {
            u[i] = u[i + 1];
            r_mat.col(i) = r_mat.col(i + 1);
        }
        u[p - 1] = u[p];
        --p;
        for (Eigen::Index jj = qq; jj < p; ++jj) {
            const Givens g = make_givens(r_mat(jj, jj), r_mat(jj + 1, jj));
            if (g.h == 0.0) continue;
            r_mat(jj, jj) = g.h;
            r_mat(jj + 1, jj) = 0.0;
            for (Eigen::Index k = jj + 1; k < p; ++k) {
                const double t1 = r_mat(jj, k), t2 = r_mat(jj + 1, k);
                r_mat(jj, k) = g.c * t1 + g.s * t2;
                r_mat(jj + 1, k) = -g.s * t1 + g.c * t2;
            }
            for (Eigen::Index k = 0; k < m; ++k) {
                const double t1 = j_mat(k, jj), t2 = j_mat(k, jj + 1);
                j_mat(k, jj) = g.c * t1 + g.s * t2;
                j_mat(k, jj + 1) = -g.s * t1 + g.c * t2;
            }
        }
    };

    while (true) {
        if (++iterations > max_iter) throw std::runtime_error("solve_map: iteration cap hit (cycling?)");

        // most violated inactive constraint; warm hints get first crack
        int chosen = -1;
        double worst = 0.0;
        for (int k : order) {
            if (is_active(k)) continue;
            const double s = cons.normals.col(k).dot(x) - cons.b[k];
            const double tol = 1e-10 * (1.0 + std::abs(cons.b[k]));
            if (s < -tol && s < worst) {
                worst = s;
                chosen = k;
            }
        }
        if (chosen < 0) break;  // primal feasible -> optimal

        const Eigen::VectorXd np = cons.normals.col(chosen);
        u[p] = 0.0;
        double s_val = np.dot(x) - cons.b[chosen];

        while (true) {
            if (++iterations > max_iter)
                throw std::runtime_error("solve_map: iteration cap hit (cycling?)");
            Eigen::VectorXd d = j_mat.transpose() * np;
            Eigen::VectorXd z = j_mat.rightCols(m - p) * d.tail(m - p);
            Eigen::VectorXd r;
            if (p > 0)
                r = r_mat.topLeftCorner(p, p).triangularView<Eigen::Upper>().solve(d.head(p));

            // dual blocking step
            double t1 = INF;
            Eigen::Index blocker = -1;
            for (Eigen::Index i = 0; i < p; ++i) {
                if (r[i] > 0.0) {
                    const double t = u[i] / r[i];
                    if (t < t1) {
                        t1 = t;
                        blocker = i;
                    }
                }
            }
            // full primal step to the constraint
            const double zn = z.dot(np);
            const double t2 = (zn > 1e-14) ? -s_val / zn : INF;

            const double t = std::min(t1, t2);
            if (t == INF) throw std::runtime_error("solve_map: constraints infeasible");

            if (t2 == INF) {
                // pure dual step: drop the blocker and retry the same constraint
                u.head(p) -= t * r;
                u[p] += t;
                delete_constraint(blocker);
                continue;
            }

            x += t * z;
            u.head(p) -= t * r;
            u[p] += t;
            s_val = np.dot(x) - cons.b[chosen];

            if (t == t2) {
                if (!add_constraint(d))
                    throw std::runtime_error("solve_map: degenerate active set (dependent normals)");
                active_pos.push_back(chosen);
                break;
            }
            delete_constraint(blocker);
        }
    }

    QpResult out;
    out.mode = std::move(x);
    out.iterations = iterations;
    for (int k : active_pos) out.active.push_back(cons.ids[k]);
    out.active_rows = rows_of(out.active);
    out.kkt_residual = kkt_residual_of(cg, cons, out.mode, active_pos, u.head(p));
    return out;
}

double variational_gap(const ConditionedGaussian& cg, const Eigen::VectorXd& mode,
                       const Eigen::VectorXd& z) {
    const Eigen::VectorXd w = apply_precision(cg.chol, cg.mean - mode);
    return w.dot(z - mode);
}

namespace detail {

QpResult solve_map_projected_gradient(const ConditionedGaussian& cg,
                                      const LinearConstraintSystem& sys) {
    const Eigen::Index m = cg.size();
    const Eigen::Index q = sys.rows();

    // row norms for halfspace projections
    Eigen::VectorXd row_sq(q);
    for (Eigen::Index r = 0; r < q; ++r) {
        double s = 0.0;
        for (SparseRowMat::InnerIterator it(sys.lambda, r); it; ++it) s += it.value() * it.value();
        row_sq[r] = s;
    }

    // Dykstra's alternating projections onto the row slabs
    auto project = [&](Eigen::VectorXd x) {
        std::vector<Eigen::VectorXd> inc(q, Eigen::VectorXd::Zero(m));
        for (int sweep = 0; sweep < 400; ++sweep) {
            double moved = 0.0;
            for (Eigen::Index r = 0; r < q; ++r) {
                if (row_sq[r] == 0.0) continue;
                Eigen::VectorXd y = x + inc[r];
                double v = 0.0;
                for (SparseRowMat::InnerIterator it(sys.lambda, r); it; ++it)
                    v += it.value() * y[it.col()];
                double shift = 0.0;
                if (v < sys.lower[r]) shift = (sys.lower[r] - v) / row_sq[r];
                else if (v > sys.upper[r]) shift = (sys.upper[r] - v) / row_sq[r];
                Eigen::VectorXd xn = y;
                if (shift != 0.0)
                    for (SparseRowMat::InnerIterator it(sys.lambda, r); it; ++it)
                        xn[it.col()] += shift * it.value();
                inc[r] = y - xn;
                moved = std::max(moved, (xn - x).cwiseAbs().maxCoeff());
                x = xn;
            }
            if (moved < 1e-13) break;
        }
        return x;
    };

    auto grad = [&](const Eigen::VectorXd& x) { return apply_precision(cg.chol, x - cg.mean); };
    auto objective = [&](const Eigen::VectorXd& x) {
        return 0.5 * (x - cg.mean).dot(apply_precision(cg.chol, x - cg.mean));
    };

    // crude Lipschitz estimate via power iteration on Sigma^-1
    Eigen::VectorXd v = Eigen::VectorXd::Ones(m).normalized();
    double lip = 1.0;
    for (int it = 0; it < 30; ++it) {
        v = apply_precision(cg.chol, v);
        lip = v.norm();
        if (lip == 0.0) break;
        v /= lip;
    }
    double step = 1.0 / std::max(lip, 1e-12);

    Eigen::VectorXd x = project(cg.mean);
    double f = objective(x);
    int iterations = 0;
    for (; iterations < 20000; ++iterations) {
        Eigen::VectorXd xn = project(x - step * grad(x));
        const double fn = objective(xn);
        if (fn > f + 1e-14) {
            step *= 0.5;
            if (step < 1e-18) break;
            continue;
        }
        const double drop = f - fn;
        x = std::move(xn);
        f = fn;
        if (drop < 1e-12 * (1.0 + std::abs(f))) break;
    }

    QpResult out;
    out.mode = x;
    out.iterations = iterations;
    // proximal residual standing in for the KKT system
    const Eigen::VectorXd res = x - project(x - grad(x));
    out.kkt_residual = res.cwiseAbs().maxCoeff();
    for (Eigen::Index r = 0; r < q; ++r) {
        double vvv = 0.0;
        for (SparseRowMat::InnerIterator it(sys.lambda, r); it; ++it) vvv += it.value() * x[it.col()];
        const double tol = 1e-8 * (1.0 + std::abs(vvv));
        if (sys.lower[r] > -INF && vvv - sys.lower[r] <= tol) out.active.push_back(static_cast<int>(2 * r));
        if (sys.upper[r] < INF && sys.upper[r] - vvv <= tol) out.active.push_back(static_cast<int>(2 * r + 1));
    }
    out.active_rows = rows_of(out.active);
    return out;
}

}  // namespace detail

}  // namespace ineqgp
