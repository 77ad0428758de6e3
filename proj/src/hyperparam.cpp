#include "ineqgp/hyperparam.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "ineqgp/tmvn.hpp"

namespace ineqgp {

namespace {

constexpr double INF = std::numeric_limits<double>::infinity();

// Which entries of the log-parameter vector are free, and how they map onto
// (variance, lengthscales, tau2).
struct ParamLayout {
    bool variance_free = false;
    std::vector<bool> lengthscale_free;
    bool tau2_free = false;
    int count = 0;

    double fixed_variance = 1.0;
    std::vector<double> fixed_lengthscales;
    double fixed_tau2 = 0.0;
};

struct Unpacked {
    KernelSpec spec;
    double tau2 = 0.0;
};

Unpacked unpack(const ParamLayout& lay, KernelFamily family, const Eigen::VectorXd& p) {
    Unpacked u;
    u.spec.family = family;
    const int d = static_cast<int>(lay.lengthscale_free.size());
    u.spec.lengthscales.resize(d);
    int k = 0;
    u.spec.variance = lay.variance_free ? std::exp(p[k++]) : lay.fixed_variance;
    for (int i = 0; i < d; ++i)
        u.spec.lengthscales[i] =
            lay.lengthscale_free[i] ? std::exp(p[k++]) : lay.fixed_lengthscales[i];
    u.tau2 = lay.tau2_free ? std::exp(p[k++]) : lay.fixed_tau2;
    return u;
}

class Objective {
  public:
    Objective(const ParamLayout& lay, KernelFamily family, const KnotGrid& grid,
              const SparseRowMat& phi, const Eigen::VectorXd& y)
        : lay_(lay), family_(family), grid_(grid), phi_(phi), y_(y) {}

    // Negative log marginal likelihood and its gradient in log parameters.
    // Cholesky failures surface as +inf so the line search backs away.
    double operator()(const Eigen::VectorXd& p, Eigen::VectorXd& grad) {
        ++evaluations;
        grad.setZero(p.size());
        const Unpacked u = unpack(lay_, family_, p);
        MarginalLikelihood ml;
        try {
            ml = log_marginal_likelihood(u.spec, grid_, phi_, y_, u.tau2);
        } catch (const std::runtime_error&) {
            return INF;
        }
        if (!std::isfinite(ml.value)) return INF;
        int k = 0;
        if (lay_.variance_free) grad[k++] = -u.spec.variance * ml.d_variance;
        for (int i = 0; i < static_cast<int>(lay_.lengthscale_free.size()); ++i)
            if (lay_.lengthscale_free[i]) grad[k++] = -u.spec.lengthscales[i] * ml.d_lengthscales[i];
        if (lay_.tau2_free) grad[k++] = -u.tau2 * ml.d_tau2;
        return -ml.value;
    }

    int evaluations = 0;

  private:
    const ParamLayout& lay_;
    KernelFamily family_;
    const KnotGrid& grid_;
    const SparseRowMat& phi_;
    const Eigen::VectorXd& y_;
};

Eigen::VectorXd project(const Eigen::VectorXd& p, const Eigen::VectorXd& lo,
                        const Eigen::VectorXd& hi) {
    return p.cwiseMax(lo).cwiseMin(hi);
}

struct DescentOutcome {
    Eigen::VectorXd point;
    double value = INF;
    bool started = false;  // initial point had a finite objective
};

// Projected L-BFGS with Armijo backtracking along the projection arc.
DescentOutcome minimize(Objective& obj, Eigen::VectorXd p, const Eigen::VectorXd& lo,
                        const Eigen::VectorXd& hi, int max_iters, double tol) {
    constexpr int MEMORY = 8;
    constexpr double ARMIJO = 1e-4;

    DescentOutcome out;
    p = project(p, lo, hi);
    Eigen::VectorXd grad(p.size());
    double f = obj(p, grad);
    if (!std::isfinite(f)) return out;
    out.started = true;

    std::deque<Eigen::VectorXd> s_hist, y_hist;
    std::deque<double> rho_hist;
    int stalled = 0;

    for (int iter = 0; iter < max_iters; ++iter) {
        // Two-loop recursion for the quasi-Newton direction.
        Eigen::VectorXd q = grad;
        std::vector<double> alpha(s_hist.size());
        for (int i = static_cast<int>(s_hist.size()) - 1; i >= 0; --i) {
            alpha[i] = rho_hist[i] * s_hist[i].dot(q);
            q -= alpha[i] * y_hist[i];
        }
        if (!s_hist.empty()) {
            const double gamma =
                s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
            q *= gamma;
        }
        for (std::size_t i = 0; i < s_hist.size(); ++i) {
            const double beta = rho_hist[i] * y_hist[i].dot(q);
            q += (alpha[i] - beta) * s_hist[i];
        }
        Eigen::VectorXd dir = -q;
        if (dir.dot(grad) >= 0.0) dir = -grad;  // fall back to steepest descent

        double step = 1.0;
        double f_new = INF;
        Eigen::VectorXd p_new, grad_new(p.size());
        bool accepted = false;
        for (int ls = 0; ls < 40; ++ls) {
            p_new = project(p + step * dir, lo, hi);
            const Eigen::VectorXd disp = p_new - p;
            if (disp.lpNorm<Eigen::Infinity>() < 1e-15) break;
            f_new = obj(p_new, grad_new);
            if (std::isfinite(f_new) && f_new <= f + ARMIJO * grad.dot(disp)) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;

        const Eigen::VectorXd s = p_new - p;
        const Eigen::VectorXd yv = grad_new - grad;
        const double sy = s.dot(yv);
        if (sy > 1e-12 * s.norm() * yv.norm()) {
            s_hist.push_back(s);
            y_hist.push_back(yv);
            rho_hist.push_back(1.0 / sy);
            if (static_cast<int>(s_hist.size()) > MEMORY) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
        }

        const double decrease = f - f_new;
        p = p_new;
        f = f_new;
        grad = grad_new;

        // Projected gradient: zero where the box is active and pushing outward.
        Eigen::VectorXd pg = grad;
        for (Eigen::Index i = 0; i < p.size(); ++i) {
            if ((p[i] <= lo[i] + 1e-14 && grad[i] > 0.0) ||
                (p[i] >= hi[i] - 1e-14 && grad[i] < 0.0))
                pg[i] = 0.0;
        }
        if (pg.lpNorm<Eigen::Infinity>() <= 1e-6 * (1.0 + std::abs(f))) break;
        stalled = decrease <= tol * (1.0 + std::abs(f)) ? stalled + 1 : 0;
        if (stalled >= 2) break;
    }

    out.point = p;
    out.value = f;
    return out;
}

}  // namespace

FitResult fit_ml(KernelFamily family, const KnotGrid& grid, const SparseRowMat& phi,
                 const Eigen::VectorXd& y, const FixedParams& fixed, const FitOptions& opts) {
    const Eigen::Index n = y.size();
    const int d = grid.dim();
    if (n == 0) throw std::invalid_argument("fit_ml: no observations");
    if (phi.rows() != n || phi.cols() != grid.total_knots())
        throw std::invalid_argument("fit_ml: design matrix shape mismatch");
    if (!fixed.lengthscales.empty() && static_cast<int>(fixed.lengthscales.size()) != d)
        throw std::invalid_argument("fit_ml: fixed lengthscales must match input dimension");
    if (opts.starts < 1) throw std::invalid_argument("fit_ml: need at least one start");

    const double var_y = (y.array() - y.mean()).square().sum() / static_cast<double>(n);
    const double scale_v = var_y > 0.0 ? var_y : std::max(y.squaredNorm() / n, 1e-8);
    const double tau2_floor = 1e-8 * scale_v;

    ParamLayout lay;
    lay.variance_free = !fixed.variance.has_value();
    lay.fixed_variance = fixed.variance.value_or(1.0);
    lay.lengthscale_free.resize(d, true);
    lay.fixed_lengthscales.resize(d, 1.0);
    for (int i = 0; i < d; ++i) {
        if (!fixed.lengthscales.empty() && fixed.lengthscales[i].has_value()) {
            lay.lengthscale_free[i] = false;
            lay.fixed_lengthscales[i] = *fixed.lengthscales[i];
        }
    }
    lay.tau2_free = !fixed.tau2.has_value();
    lay.fixed_tau2 = fixed.tau2.value_or(0.0);
    lay.count = (lay.variance_free ? 1 : 0) + (lay.tau2_free ? 1 : 0);
    for (int i = 0; i < d; ++i) lay.count += lay.lengthscale_free[i] ? 1 : 0;

    Objective obj(lay, family, grid, phi, y);

    if (lay.count == 0) {
        Eigen::VectorXd none(0), g;
        const double f = obj(none, g);
        if (!std::isfinite(f)) {
            if (!lay.tau2_free && lay.fixed_tau2 == 0.0)
                throw std::runtime_error(
                    "fit_ml: marginal covariance is singular at the fixed parameters "
                    "with tau2 = 0; fix a positive tau2 or leave it free");
            throw std::runtime_error(
                "fit_ml: likelihood is not finite at the fixed parameters "
                "(marginal covariance not positive definite)");
        }
        const Unpacked u = unpack(lay, family, none);
        return {u.spec, u.tau2, -f, 0, obj.evaluations};
    }

    // Box and multi-start ranges, all in log space. Starts are stratified
    // log-uniform per coordinate with independently shuffled strata.
    Eigen::VectorXd box_lo(lay.count), box_hi(lay.count), start_lo(lay.count),
        start_hi(lay.count);
    {
        int k = 0;
        const auto set = [&](double blo, double bhi, double slo, double shi) {
            box_lo[k] = std::log(blo);
            box_hi[k] = std::log(bhi);
            start_lo[k] = std::log(slo);
            start_hi[k] = std::log(shi);
            ++k;
        };
        if (lay.variance_free)
            set(1e-6 * scale_v, 1e6 * scale_v, 1e-2 * scale_v, 1e1 * scale_v);
        for (int i = 0; i < d; ++i)
            if (lay.lengthscale_free[i]) set(1e-3, 1e3, 1e-2, 1e1);
        if (lay.tau2_free)
            set(tau2_floor, 1e1 * scale_v, std::max(tau2_floor, 1e-4 * scale_v),
                1e-1 * scale_v);
    }

    Rng rng(opts.seed);
    std::vector<std::vector<int>> strata(lay.count);
    for (int k = 0; k < lay.count; ++k) {
        strata[k].resize(opts.starts);
        std::iota(strata[k].begin(), strata[k].end(), 0);
        for (int i = opts.starts - 1; i > 0; --i) {
            const int j = static_cast<int>(rng.uniform() * (i + 1));
            std::swap(strata[k][i], strata[k][std::min(j, i)]);
        }
    }

    FitResult best;
    best.loglik = -INF;
    int usable = 0;
    for (int s = 0; s < opts.starts; ++s) {
        Eigen::VectorXd p0(lay.count);
        for (int k = 0; k < lay.count; ++k) {
            const double frac = (strata[k][s] + rng.uniform()) / opts.starts;
            p0[k] = start_lo[k] + frac * (start_hi[k] - start_lo[k]);
        }
        DescentOutcome run = minimize(obj, p0, box_lo, box_hi, opts.max_iters, opts.tol);
        if (!run.started) continue;
        ++usable;
        if (-run.value > best.loglik) {
            const Unpacked u = unpack(lay, family, run.point);
            best.kernel = u.spec;
            best.tau2 = u.tau2;
            best.loglik = -run.value;
            best.best_start = s;
        }
    }
    best.evaluations = obj.evaluations;
    if (usable == 0)
        throw std::runtime_error(
            "fit_ml: every start failed; the marginal covariance is singular for all "
            "attempted parameters (try fixing tau2 > 0)");
    return best;
}

}  // namespace ineqgp
