#include "ineqgp/emulator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "ineqgp/diagnostics.hpp"
#include "ineqgp/linalg.hpp"

namespace ineqgp {

namespace {

constexpr double INF = std::numeric_limits<double>::infinity();

std::uint64_t dataset_fingerprint(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    std::uint64_t h = fnv1a64(nullptr, 0);
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            const double v = x(i, j);
            h = fnv1a64(&v, sizeof v, h);
        }
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double v = y[i];
        h = fnv1a64(&v, sizeof v, h);
    }
    return h;
}

void append_bound_warnings(const std::vector<ConstraintChoice>& choices, const Eigen::VectorXd& y,
                           std::vector<std::string>& warnings) {
    for (const auto& c : choices) {
        if (c.kind != ConstraintKind::Bound) continue;
        std::vector<Eigen::Index> bad;
        for (Eigen::Index i = 0; i < y.size(); ++i)
            if (y[i] < c.lower || y[i] > c.upper) bad.push_back(i);
        if (bad.empty()) continue;
        std::ostringstream msg;
        msg << bad.size() << " observation(s) outside the bound [" << c.lower << ", " << c.upper
            << "] (absorbed by the noise term): indices";
        const std::size_t shown = std::min<std::size_t>(bad.size(), 8);
        for (std::size_t k = 0; k < shown; ++k) msg << ' ' << bad[k];
        if (bad.size() > shown) msg << " ...";
        warnings.push_back(msg.str());
    }
}

// Rank check plus the row-selection solver used to invert lambda on its image.
struct Recovery {
    std::vector<Eigen::Index> rows;  // m independent rows of lambda
    Eigen::PartialPivLU<Eigen::MatrixXd> lu;
};

Recovery make_recovery(const LinearConstraintSystem& sys) {
    const Eigen::Index m = sys.cols();
    Eigen::MatrixXd lt = Eigen::MatrixXd(sys.lambda).transpose();  // m x q
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(lt);
    if (qr.rank() < m) {
        std::ostringstream msg;
        msg << "sample_paths: constraint system has rank " << qr.rank() << " < " << m
            << ", so knot values cannot be recovered from constraint coordinates; "
               "add bound (or positivity) rows to pin the remaining directions";
        throw std::runtime_error(msg.str());
    }
    Recovery rec;
    const auto& perm = qr.colsPermutation().indices();
    rec.rows.assign(perm.data(), perm.data() + m);
    Eigen::MatrixXd s(m, m);
    for (Eigen::Index i = 0; i < m; ++i) s.row(i) = lt.col(rec.rows[i]).transpose();
    rec.lu.compute(s);
    return rec;
}

}  // namespace

Eigen::MatrixXd Normalization::to_unit(const Eigen::MatrixXd& x) const {
    if (x.cols() != lo.size())
        throw std::invalid_argument("input has " + std::to_string(x.cols()) +
                                    " columns, model expects " + std::to_string(lo.size()));
    Eigen::MatrixXd u(x.rows(), x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double span = hi[j] - lo[j];
        const double slack = 1e-9 * std::max(1.0, std::abs(span));
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            if (x(i, j) < lo[j] - slack || x(i, j) > hi[j] + slack) {
                std::ostringstream msg;
                msg << "point " << i << " lies outside the fitted domain in dimension " << j
                    << ": " << x(i, j) << " not in [" << lo[j] << ", " << hi[j] << "]";
                throw std::invalid_argument(msg.str());
            }
            u(i, j) = std::clamp((x(i, j) - lo[j]) / span, 0.0, 1.0);
        }
    }
    return u;
}

ConstraintChoice bounds_choice(double lower, double upper) {
    ConstraintChoice c;
    c.kind = ConstraintKind::Bound;
    c.lower = lower;
    c.upper = upper;
    return c;
}

ConstraintChoice monotone_choice(int dim, bool increasing) {
    ConstraintChoice c;
    c.kind = ConstraintKind::Monotone;
    c.dim = dim;
    c.increasing = increasing;
    return c;
}

ConstraintChoice convex_choice(int dim) {
    ConstraintChoice c;
    c.kind = ConstraintKind::Convex;
    c.dim = dim;
    return c;
}

LinearConstraintSystem build_constraints(const KnotGrid& grid,
                                         const std::vector<ConstraintChoice>& choices) {
    const Eigen::Index m = grid.total_knots();
    if (choices.empty()) {
        LinearConstraintSystem none;
        none.lambda.resize(0, m);
        none.lower.resize(0);
        none.upper.resize(0);
        return none;
    }
    if (grid.dim() == 1 && choices.size() == 2) {
        const ConstraintChoice* b = nullptr;
        const ConstraintChoice* mono = nullptr;
        for (const auto& c : choices) {
            if (c.kind == ConstraintKind::Bound) b = &c;
            if (c.kind == ConstraintKind::Monotone) mono = &c;
        }
        if (b && mono && std::isfinite(b->lower) && std::isfinite(b->upper))
            return minimal_monotone_bounds(grid, b->lower, b->upper, mono->increasing);
    }
    std::vector<LinearConstraintSystem> parts;
    parts.reserve(choices.size());
    for (const auto& c : choices) {
        switch (c.kind) {
            case ConstraintKind::Bound:
                parts.push_back(bounds(grid, c.lower, c.upper));
                break;
            case ConstraintKind::Monotone:
                parts.push_back(monotone(grid, c.dim, c.increasing));
                break;
            case ConstraintKind::Convex:
                parts.push_back(convex(grid, c.dim));
                break;
        }
    }
    return compose(parts);
}

EmulatorModel fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const FitConfig& config) {
    const Eigen::Index n = x.rows();
    const int d = static_cast<int>(x.cols());
    if (n == 0) throw std::invalid_argument("fit: no observations");
    if (y.size() != n) throw std::invalid_argument("fit: x and y row counts differ");
    if (d < 1) throw std::invalid_argument("fit: inputs need at least one column");
    if (!x.allFinite() || !y.allFinite())
        throw std::invalid_argument("fit: inputs contain non-finite values");

    std::vector<int> knots = config.knots;
    if (knots.empty()) {
        if (d != 1)
            throw std::invalid_argument("fit: per-dimension knot counts required for d > 1");
        knots = {25};
    }
    if (static_cast<int>(knots.size()) != d)
        throw std::invalid_argument("fit: need one knot count per input dimension");

    EmulatorModel model;
    model.grid = make_grid(knots);
    const Eigen::Index m = model.grid.total_knots();
    if (m > config.knot_budget) {
        std::ostringstream msg;
        msg << "fit: knot grid has " << m << " knots, over the budget of " << config.knot_budget;
        throw std::invalid_argument(msg.str());
    }

    if (config.domain) {
        model.norm.lo = config.domain->first;
        model.norm.hi = config.domain->second;
        if (model.norm.lo.size() != d || model.norm.hi.size() != d)
            throw std::invalid_argument("fit: domain bounds must have one entry per dimension");
        for (int j = 0; j < d; ++j)
            if (!(model.norm.lo[j] < model.norm.hi[j]))
                throw std::invalid_argument("fit: domain lower bound must be below upper bound");
    } else {
        model.norm.lo = x.colwise().minCoeff();
        model.norm.hi = x.colwise().maxCoeff();
        for (int j = 0; j < d; ++j) {
            if (model.norm.lo[j] == model.norm.hi[j]) {
                // Constant input column: center it in a unit box.
                model.norm.lo[j] -= 0.5;
                model.norm.hi[j] += 0.5;
            }
        }
    }

    const Eigen::MatrixXd xu = model.norm.to_unit(x);
    const SparseRowMat phi = design_matrix(model.grid, xu);
    model.constraints = build_constraints(model.grid, config.constraints);
    if (model.constrained()) model.constraints.validate();

    FixedParams fixed = config.fixed;
    if (config.tau2_rel) {
        if (!fixed.variance)
            throw std::invalid_argument(
                "fit: tau2_rel is relative to the kernel variance and needs a fixed variance");
        if (fixed.tau2)
            throw std::invalid_argument("fit: give either tau2 or tau2_rel, not both");
        fixed.tau2 = *config.tau2_rel * *fixed.variance;
    }

    bool all_fixed = fixed.variance.has_value() && fixed.tau2.has_value() &&
                     static_cast<int>(fixed.lengthscales.size()) == d;
    if (all_fixed)
        for (const auto& l : fixed.lengthscales) all_fixed = all_fixed && l.has_value();

    if (all_fixed) {
        model.kernel.family = config.family;
        model.kernel.variance = *fixed.variance;
        model.kernel.lengthscales.resize(d);
        for (int j = 0; j < d; ++j) model.kernel.lengthscales[j] = *fixed.lengthscales[j];
        model.tau2 = *fixed.tau2;
        model.loglik =
            log_marginal_likelihood(model.kernel, model.grid, phi, y, model.tau2).value;
    } else {
        const FitResult fr = fit_ml(config.family, model.grid, phi, y, fixed, config.ml);
        model.kernel = fr.kernel;
        model.tau2 = fr.tau2;
        model.loglik = fr.loglik;
    }

    const Eigen::MatrixXd gram = gram_product_grid(model.kernel, model.grid.axes());
    const bool woodbury = model.tau2 > 0.0 && m < n / 2;
    model.conditioned = woodbury ? condition_woodbury(gram, phi, y, model.tau2)
                                 : condition(gram, phi, y, model.tau2);

    if (model.constrained()) {
        model.map_result = solve_map(model.conditioned, model.constraints);
        model.mode = model.map_result.mode;
        if (!is_feasible(model.constraints, model.mode, 1e-6))
            throw std::runtime_error("fit: MAP solution failed its feasibility check");
        append_bound_warnings(config.constraints, y, model.warnings);
    } else {
        model.mode = model.conditioned.mean;
        model.map_result.mode = model.mode;
    }

    model.fitted_from = dataset_fingerprint(x, y);
    return model;
}

EmulatorModel fit_tensor(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                         const FitConfig& config) {
    if (x.cols() < 2)
        throw std::invalid_argument("fit_tensor: needs d >= 2 input dimensions; use fit for 1D");
    if (config.knots.empty())
        throw std::invalid_argument("fit_tensor: per-dimension knot counts are required");
    return fit(x, y, config);
}

EmulatorModel with_constraints(const EmulatorModel& model,
                               const std::vector<ConstraintChoice>& choices) {
    EmulatorModel out = model;
    out.constraints = build_constraints(out.grid, choices);
    out.warnings.clear();
    if (out.constrained()) {
        out.constraints.validate();
        out.map_result = solve_map(out.conditioned, out.constraints);
        out.mode = out.map_result.mode;
        if (!is_feasible(out.constraints, out.mode, 1e-6))
            throw std::runtime_error("with_constraints: MAP solution failed its feasibility check");
    } else {
        out.mode = out.conditioned.mean;
        out.map_result = QpResult{};
        out.map_result.mode = out.mode;
    }
    return out;
}

PathSamples sample_paths(const EmulatorModel& model, const SampleConfig& cfg) {
    if (!model.constrained())
        throw std::invalid_argument(
            "sample_paths: model has no constraints; the posterior is Gaussian, use predict");
    const Eigen::Index m = model.knot_count();
    const LinearConstraintSystem& sys = model.constraints;
    const Recovery rec = make_recovery(sys);

    const TruncatedGaussianSpec spec = push_forward(model.conditioned, sys);
    const Eigen::VectorXd mode_z =
        (sys.lambda * model.mode).cwiseMax(spec.lower).cwiseMin(spec.upper);

    PathSamples out;
    switch (cfg.sampler) {
        case SamplerKind::Rsm:
            out.chain = sample_rsm(spec, mode_z, cfg.count, cfg.seed, cfg.max_proposals);
            break;
        case SamplerKind::Hmc:
            out.chain = sample_hmc(spec, mode_z, cfg.count, cfg.burn_in, cfg.seed);
            break;
        case SamplerKind::Gibbs:
            // knot-coordinate form: handles q > m (singular image covariance)
            // and hands back exact knot values with no recovery solve
            out.chain = sample_gibbs_xi(model.conditioned, sys, model.mode, cfg.count,
                                        cfg.burn_in, cfg.thinning, cfg.seed);
            break;
        case SamplerKind::NaiveRejection:
            out.chain = sample_naive_rejection(spec, cfg.count, cfg.seed,
                                               cfg.max_proposals > 0 ? cfg.max_proposals
                                                                     : 100'000'000);
            break;
    }

    const Eigen::Index got = out.chain.count();
    if (out.chain.xi.rows() == got && out.chain.xi.cols() == m) {
        out.xi = out.chain.xi;
        out.recovery_residual = 0.0;
        return out;
    }

    out.xi.resize(got, m);
    Eigen::VectorXd zsel(m);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < got; ++i) {
        const Eigen::VectorXd z = out.chain.draws.row(i);
        for (Eigen::Index k = 0; k < m; ++k) zsel[k] = z[rec.rows[k]];
        const Eigen::VectorXd xi = rec.lu.solve(zsel);
        const double res = (sys.lambda * xi - z).lpNorm<Eigen::Infinity>();
        worst = std::max(worst, res);
        if (res > 1e-6 * (1.0 + z.lpNorm<Eigen::Infinity>())) {
            std::ostringstream msg;
            msg << "sample_paths: draw " << i << " is inconsistent with the constraint map "
                << "(recovery residual " << res << ")";
            throw std::runtime_error(msg.str());
        }
        out.xi.row(i) = xi;
    }
    out.recovery_residual = worst;
    return out;
}

Eigen::MatrixXd evaluate_paths(const EmulatorModel& model, const PathSamples& paths,
                               const Eigen::MatrixXd& x) {
    const SparseRowMat phi = design_matrix(model.grid, model.norm.to_unit(x));
    Eigen::MatrixXd vt = phi * paths.xi.transpose();  // points x draws
    return vt.transpose();
}

Prediction predict(const EmulatorModel& model, const Eigen::MatrixXd& x, double lo_p, double hi_p,
                   const PathSamples* paths, const SampleConfig* cfg) {
    if (!(lo_p > 0.0 && lo_p < hi_p && hi_p < 1.0))
        throw std::invalid_argument("predict: quantile levels must satisfy 0 < lo < hi < 1");
    const SparseRowMat phi = design_matrix(model.grid, model.norm.to_unit(x));
    const Eigen::Index npts = phi.rows();

    Prediction pred;
    pred.lo_p = lo_p;
    pred.hi_p = hi_p;
    pred.mode = phi * model.mode;

    if (!model.constrained()) {
        pred.mean = phi * model.conditioned.mean;
        const double zlo = detail::norm_ppf(lo_p);
        const double zhi = detail::norm_ppf(hi_p);
        pred.q_lo.resize(npts);
        pred.q_hi.resize(npts);
        for (Eigen::Index i = 0; i < npts; ++i) {
            const Eigen::VectorXd row = phi.row(i).transpose();
            const double var = row.dot(model.conditioned.cov * row);
            const double sd = std::sqrt(std::max(var, 0.0));
            pred.q_lo[i] = pred.mean[i] + zlo * sd;
            pred.q_hi[i] = pred.mean[i] + zhi * sd;
        }
        return pred;
    }

    PathSamples local;
    if (!paths) {
        local = sample_paths(model, cfg ? *cfg : SampleConfig{});
        paths = &local;
    }
    Eigen::MatrixXd values = phi * paths->xi.transpose();  // points x draws
    pred.mean = values.rowwise().mean();
    pred.q_lo.resize(npts);
    pred.q_hi.resize(npts);
    for (Eigen::Index i = 0; i < npts; ++i) {
        const Eigen::VectorXd col = values.row(i).transpose();
        pred.q_lo[i] = quantile(col, lo_p);
        pred.q_hi[i] = quantile(col, hi_p);
    }
    return pred;
}

}  // namespace ineqgp
