#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ineqgp/constraints.hpp"
#include "ineqgp/hyperparam.hpp"
#include "ineqgp/kernel.hpp"
#include "ineqgp/knot_grid.hpp"
#include "ineqgp/posterior.hpp"
#include "ineqgp/qp.hpp"
#include "ineqgp/tmvn.hpp"

namespace ineqgp {

// Per-dimension affine map taking the input box [lo, hi] onto the unit cube.
struct Normalization {
    Eigen::VectorXd lo, hi;

    int dim() const { return static_cast<int>(lo.size()); }
    // Throws when a point leaves the box by more than a sliver of roundoff.
    Eigen::MatrixXd to_unit(const Eigen::MatrixXd& x) const;
};

// Declarative constraint request; resolved against the knot grid at fit time.
struct ConstraintChoice {
    ConstraintKind kind = ConstraintKind::Bound;
    double lower = -std::numeric_limits<double>::infinity();  // bounds only
    double upper = std::numeric_limits<double>::infinity();
    int dim = 0;             // monotone / convex direction
    bool increasing = true;  // monotone only
};

ConstraintChoice bounds_choice(double lower, double upper);
ConstraintChoice monotone_choice(int dim = 0, bool increasing = true);
ConstraintChoice convex_choice(int dim = 0);

// Resolves the requested constraints on a grid. A 1D bounds+monotone pair
// collapses to the minimal m+1-row form (first knot bounded below, differences,
// last knot bounded above), which keeps the constraint image square-ish and
// rejection sampling viable.
LinearConstraintSystem build_constraints(const KnotGrid& grid,
                                         const std::vector<ConstraintChoice>& choices);

struct FitConfig {
    KernelFamily family = KernelFamily::Matern52;
    std::vector<int> knots;  // per dimension; empty selects {25} in 1D
    std::vector<ConstraintChoice> constraints;
    FixedParams fixed;
    // Noise fixed relative to the kernel variance (tau2 = tau2_rel * sigma2);
    // requires a fixed variance so the value is well defined up front.
    std::optional<double> tau2_rel;
    FitOptions ml;
    // Explicit input box; defaults to the per-dimension data range.
    std::optional<std::pair<Eigen::VectorXd, Eigen::VectorXd>> domain;
    Eigen::Index knot_budget = 4096;
};

struct EmulatorModel {
    KernelSpec kernel;
    KnotGrid grid;
    LinearConstraintSystem constraints;  // zero rows when unconstrained
    double tau2 = 0.0;
    Normalization norm;
    ConditionedGaussian conditioned;
    Eigen::VectorXd mode;  // knot-value MAP; equals the mean when unconstrained
    QpResult map_result;
    double loglik = std::numeric_limits<double>::quiet_NaN();
    std::uint64_t fitted_from = 0;  // dataset fingerprint
    std::vector<std::string> warnings;

    bool constrained() const { return constraints.rows() > 0; }
    Eigen::Index knot_count() const { return grid.total_knots(); }
};

EmulatorModel fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const FitConfig& config);

// Multi-dimensional entry point; identical contracts plus a d >= 2 check and
// the knot-budget guard (also enforced by fit).
EmulatorModel fit_tensor(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                         const FitConfig& config);

// Attaches a different constraint set to an already fitted model, reusing its
// hyperparameters and conditioned posterior; recomputes the MAP.
EmulatorModel with_constraints(const EmulatorModel& model,
                               const std::vector<ConstraintChoice>& choices);

struct SampleConfig {
    SamplerKind sampler = SamplerKind::Hmc;
    Eigen::Index count = 10000;
    int burn_in = 100;
    int thinning = 200;  // Gibbs only
    std::uint64_t seed = 1;
    long long max_proposals = 0;  // cap for the rejection samplers, 0 = none
};

struct PathSamples {
    SampleChain chain;    // draws in constraint coordinates z
    Eigen::MatrixXd xi;   // recovered knot values, one row per draw
    double recovery_residual = 0.0;  // worst |lambda xi - z| over all draws
};

// Samples constrained knot vectors: draws z from the truncated posterior and
// recovers xi through m independent rows of lambda (exact up to roundoff).
// Requires rank(lambda) = m; rank-deficient systems error out with a hint.
PathSamples sample_paths(const EmulatorModel& model, const SampleConfig& cfg);

// Path values at raw input points: one row per sampled path.
Eigen::MatrixXd evaluate_paths(const EmulatorModel& model, const PathSamples& paths,
                               const Eigen::MatrixXd& x);

struct Prediction {
    Eigen::VectorXd mean;   // sample mean (constrained) or posterior mean
    Eigen::VectorXd mode;   // MAP curve
    Eigen::VectorXd q_lo, q_hi;
    double lo_p = 0.025, hi_p = 0.975;
};

// Pointwise summary at raw input points. Constrained models summarize sampled
// paths (reusing `paths` when provided, else sampling per `cfg`); unconstrained
// models use the closed-form Gaussian posterior.
Prediction predict(const EmulatorModel& model, const Eigen::MatrixXd& x, double lo_p = 0.025,
                   double hi_p = 0.975, const PathSamples* paths = nullptr,
                   const SampleConfig* cfg = nullptr);

}  // namespace ineqgp
