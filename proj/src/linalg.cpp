#include "ineqgp/linalg.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ineqgp {

CholResult chol_with_jitter(const Eigen::MatrixXd& a) {
    if (a.rows() != a.cols()) throw std::invalid_argument("chol_with_jitter: matrix not square");
    const Eigen::Index n = a.rows();
    if (n == 0) return {Eigen::MatrixXd(0, 0), 0.0};

    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() == Eigen::Success) return {Eigen::MatrixXd(llt.matrixL()), 0.0};

    const double scale = a.trace() / static_cast<double>(n);
    double jitter = 1e-10 * scale;
    const double cap = 1e-6 * scale;
    while (jitter <= cap * (1.0 + 1e-12)) {
        llt.compute(a + jitter * Eigen::MatrixXd::Identity(n, n));
        if (llt.info() == Eigen::Success) return {Eigen::MatrixXd(llt.matrixL()), jitter};
        jitter *= 10.0;
    }
    throw std::runtime_error(
        "chol_with_jitter: matrix not positive definite even at jitter " + std::to_string(cap));
}

Eigen::MatrixXd chol_or_throw(const Eigen::MatrixXd& a, const char* context) {
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error(std::string(context) + ": matrix not positive definite");
    return Eigen::MatrixXd(llt.matrixL());
}

Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& a, double tol) {
    if (a.rows() != a.cols()) throw std::invalid_argument("psd_factor: matrix not square");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    if (es.info() != Eigen::Success) throw std::runtime_error("psd_factor: eigendecomposition failed");
    const Eigen::VectorXd& ev = es.eigenvalues();
    const double top = std::max(1.0, ev.size() ? ev.cwiseAbs().maxCoeff() : 0.0);
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (ev[i] < -tol * top)
            throw std::runtime_error("psd_factor: matrix has a significantly negative eigenvalue");
        if (ev[i] > tol * top) ++rank;
    }
    Eigen::MatrixXd f(a.rows(), rank);
    Eigen::Index col = 0;
    // eigenvalues come back ascending; keep the non-negligible tail
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (ev[i] > tol * top) f.col(col++) = es.eigenvectors().col(i) * std::sqrt(ev[i]);
    }
    return f;
}

std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t seed) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace ineqgp
