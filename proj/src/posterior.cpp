#include "ineqgp/posterior.hpp"

#include <cmath>
#include <stdexcept>

#include "ineqgp/linalg.hpp"

namespace ineqgp {

namespace {

void check_shapes(const Eigen::MatrixXd& gram, const SparseRowMat& phi, const Eigen::VectorXd& y,
                  double tau2) {
    if (gram.rows() != gram.cols()) throw std::invalid_argument("condition: gram must be square");
    if (phi.cols() != gram.rows()) throw std::invalid_argument("condition: phi/gram size mismatch");
    if (phi.rows() != y.size()) throw std::invalid_argument("condition: phi/y size mismatch");
    if (tau2 < 0.0 || std::isnan(tau2)) throw std::invalid_argument("condition: tau2 must be >= 0");
}

ConditionedGaussian finish(Eigen::VectorXd mean, Eigen::MatrixXd cov) {
    cov = 0.5 * (cov + cov.transpose()).eval();
    CholResult cr = chol_with_jitter(cov);
    return {std::move(mean), std::move(cov), std::move(cr.L), cr.jitter};
}

}  // namespace

ConditionedGaussian condition(const Eigen::MatrixXd& gram, const SparseRowMat& phi,
                              const Eigen::VectorXd& y, double tau2) {
    check_shapes(gram, phi, y, tau2);
    const Eigen::Index n = y.size();
    if (n == 0) return finish(Eigen::VectorXd::Zero(gram.rows()), gram);

    const Eigen::MatrixXd cross = gram * phi.transpose();           // m x n
    Eigen::MatrixXd b = phi * cross;                                // phi gram phi^T
    b.diagonal().array() += tau2;
    Eigen::LLT<Eigen::MatrixXd> llt(b);
    if (llt.info() != Eigen::Success) {
        if (tau2 == 0.0)
            throw std::runtime_error(
                "condition: phi * gram * phi^T is singular at tau2 = 0; "
                "add observation noise or a jitter");
        throw std::runtime_error("condition: observation covariance is not positive definite");
    }
    Eigen::VectorXd mean = cross * llt.solve(y);
    Eigen::MatrixXd cov = gram - cross * llt.solve(cross.transpose());
    return finish(std::move(mean), std::move(cov));
}

ConditionedGaussian condition_woodbury(const Eigen::MatrixXd& gram, const SparseRowMat& phi,
                                       const Eigen::VectorXd& y, double tau2) {
    check_shapes(gram, phi, y, tau2);
    if (tau2 <= 0.0)
        throw std::invalid_argument("condition_woodbury: requires tau2 > 0 (use condition)");
    const Eigen::Index m = gram.rows();
    if (y.size() == 0) return finish(Eigen::VectorXd::Zero(m), gram);

    // Information form Sigma = (gram^-1 + phi^T phi / tau2)^-1, factored through
    // the prior Cholesky L: with W = I + L^T phi^T phi L / tau2,
    //   Sigma = L W^-1 L^T,   mean = L W^-1 (phi L)^T y / tau2.
    // W has eigenvalues >= 1, so nothing here squares the conditioning of the
    // gram matrix the way forming gram^-1 explicitly would.
    CholResult gchol = chol_with_jitter(gram);
    const Eigen::MatrixXd b = phi * gchol.L;  // n x m
    Eigen::MatrixXd w = Eigen::MatrixXd::Identity(m, m);
    w.noalias() += b.transpose() * b / tau2;
    Eigen::LLT<Eigen::MatrixXd> wllt(w);
    if (wllt.info() != Eigen::Success)
        throw std::runtime_error("condition_woodbury: information matrix not positive definite");
    Eigen::MatrixXd cov = gchol.L * wllt.solve(gchol.L.transpose());
    Eigen::VectorXd mean = gchol.L * wllt.solve(b.transpose() * y) / tau2;
    return finish(std::move(mean), std::move(cov));
}

void TruncatedGaussianSpec::validate() const {
    const Eigen::Index q = mean.size();
    if (cov.rows() != q || cov.cols() != q || lower.size() != q || upper.size() != q ||
        factor.rows() != q)
        throw std::invalid_argument("truncated spec: inconsistent sizes");
    for (Eigen::Index i = 0; i < q; ++i) {
        if (std::isnan(lower[i]) || std::isnan(upper[i]) || !(lower[i] <= upper[i]))
            throw std::invalid_argument("truncated spec: bad bounds");
    }
}

TruncatedGaussianSpec push_forward(const ConditionedGaussian& cg, const LinearConstraintSystem& sys) {
    sys.validate();
    if (sys.cols() != cg.size()) throw std::invalid_argument("push_forward: size mismatch");
    TruncatedGaussianSpec spec;
    spec.mean = sys.lambda * cg.mean;
    Eigen::MatrixXd lc = sys.lambda * cg.cov;
    spec.cov = lc * sys.lambda.transpose();
    spec.cov = 0.5 * (spec.cov + spec.cov.transpose()).eval();
    spec.lower = sys.lower;
    spec.upper = sys.upper;
    spec.factor = sys.lambda * cg.chol;
    spec.lambda = sys.lambda;
    spec.validate();
    return spec;
}

TruncatedGaussianSpec make_truncated_spec(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                                          const Eigen::VectorXd& lower, const Eigen::VectorXd& upper) {
    TruncatedGaussianSpec spec;
    spec.mean = mean;
    spec.cov = 0.5 * (cov + cov.transpose());
    spec.lower = lower;
    spec.upper = upper;
    Eigen::LLT<Eigen::MatrixXd> llt(spec.cov);
    if (llt.info() == Eigen::Success) spec.factor = llt.matrixL();
    else spec.factor = psd_factor(spec.cov);
    spec.validate();
    return spec;
}

MarginalLikelihood log_marginal_likelihood(const KernelSpec& spec, const KnotGrid& grid,
                                           const SparseRowMat& phi, const Eigen::VectorXd& y,
                                           double tau2) {
    spec.validate();
    grid.validate();
    if (spec.dim() != grid.dim())
        throw std::invalid_argument("log_marginal_likelihood: kernel/grid dimension mismatch");
    if (phi.cols() != grid.total_knots() || phi.rows() != y.size())
        throw std::invalid_argument("log_marginal_likelihood: shape mismatch");
    if (tau2 < 0.0) throw std::invalid_argument("log_marginal_likelihood: tau2 must be >= 0");

    const Eigen::Index n = y.size();
    const auto axes = grid.axes();
    const std::vector<Eigen::MatrixXd> grads = gram_product_grid_gradients(spec, axes);
    const Eigen::MatrixXd gram = spec.variance * grads[0];  // grads[0] is the correlation product

    Eigen::MatrixXd k = phi * (gram * phi.transpose());
    k.diagonal().array() += tau2;
    Eigen::LLT<Eigen::MatrixXd> llt(k);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("log_marginal_likelihood: covariance not positive definite");

    const Eigen::VectorXd alpha = llt.solve(y);
    double logdet = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) logdet += std::log(llt.matrixL()(i, i));
    MarginalLikelihood out;
    out.value = -0.5 * y.dot(alpha) - logdet - 0.5 * n * std::log(2.0 * M_PI);

    const Eigen::MatrixXd kinv = llt.solve(Eigen::MatrixXd::Identity(n, n));
    out.d_lengthscales.resize(spec.dim());
    for (std::size_t j = 0; j < grads.size(); ++j) {
        const Eigen::MatrixXd mj = phi * (grads[j] * phi.transpose());
        const double dl = 0.5 * alpha.dot(mj * alpha) - 0.5 * kinv.cwiseProduct(mj).sum();
        if (j == 0) out.d_variance = dl;
        else out.d_lengthscales[j - 1] = dl;
    }
    out.d_tau2 = 0.5 * alpha.squaredNorm() - 0.5 * kinv.trace();
    return out;
}

}  // namespace ineqgp
