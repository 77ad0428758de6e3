#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "ineqgp/constraints.hpp"
#include "ineqgp/kernel.hpp"
#include "ineqgp/knot_grid.hpp"

namespace ineqgp {

using SparseRowMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// Gaussian over knot values after conditioning on noisy observations.
struct ConditionedGaussian {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
    Eigen::MatrixXd chol;     // lower factor of cov + jitter_used * I
    double jitter_used = 0.0;

    Eigen::Index size() const { return mean.size(); }
};

// Posterior of xi ~ N(0, gram) given y = phi * xi + eps, eps ~ N(0, tau2 * I).
// tau2 = 0 demands an invertible phi * gram * phi^T and interpolates exactly.
// n = 0 observations returns the prior.
ConditionedGaussian condition(const Eigen::MatrixXd& gram, const SparseRowMat& phi,
                              const Eigen::VectorXd& y, double tau2);

// Same posterior through the m x m information-form identities; requires
// tau2 > 0 and is the cheap path when there are many more observations than knots.
ConditionedGaussian condition_woodbury(const Eigen::MatrixXd& gram, const SparseRowMat& phi,
                                       const Eigen::VectorXd& y, double tau2);

// Box-truncated Gaussian in constraint coordinates z = lambda * xi.
// `factor` satisfies factor * factor^T ~= cov (up to conditioning jitter) and is
// what the samplers whiten through; it has one column per retained direction.
struct TruncatedGaussianSpec {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
    Eigen::MatrixXd factor;
    SparseRowMat lambda;      // empty when the spec was not built from a constraint system

    Eigen::Index size() const { return mean.size(); }
    Eigen::Index rank() const { return factor.cols(); }
    void validate() const;
};

// Pushes the conditioned Gaussian through the constraint map. The factor is
// lambda times the Cholesky factor of cov, so its column count stays at m even
// when the row count q exceeds m.
TruncatedGaussianSpec push_forward(const ConditionedGaussian& cg, const LinearConstraintSystem& sys);

// Builds a spec directly from moments (mainly for tests and standalone sampling);
// the factor comes from a Cholesky when possible, otherwise an eigendecomposition
// with negative eigenvalues clipped at zero.
TruncatedGaussianSpec make_truncated_spec(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                                          const Eigen::VectorXd& lower, const Eigen::VectorXd& upper);

struct MarginalLikelihood {
    double value;
    double d_variance;
    Eigen::VectorXd d_lengthscales;
    double d_tau2;
};

// Log marginal likelihood of y under the knot model, y ~ N(0, phi gram phi^T + tau2 I),
// with analytic derivatives w.r.t. the kernel parameters and tau2.
MarginalLikelihood log_marginal_likelihood(const KernelSpec& spec, const KnotGrid& grid,
                                           const SparseRowMat& phi, const Eigen::VectorXd& y,
                                           double tau2);

}  // namespace ineqgp
