#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace ineqgp {

struct CholResult {
    Eigen::MatrixXd L;      // lower triangular, L * L^T = A + jitter * I
    double jitter = 0.0;
};

// Cholesky with an escalating jitter ladder. Starts at 1e-10 * trace(A)/n and
// multiplies by 10 until the factorization succeeds; gives up past 1e-6 * trace(A)/n.
CholResult chol_with_jitter(const Eigen::MatrixXd& a);

// Cholesky that fails hard (no jitter). Throws std::runtime_error with `context`
// in the message if A is not positive definite.
Eigen::MatrixXd chol_or_throw(const Eigen::MatrixXd& a, const char* context);

// Factor F (n x r) with F * F^T ~= A for symmetric PSD A, built from an
// eigendecomposition. Eigenvalues in [-tol, tol] are clipped to zero and their
// columns dropped; an eigenvalue below -tol * max(|eig|, 1) is an error.
Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& a, double tol = 1e-10);

// FNV-1a over raw bytes; used to fingerprint training data.
std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t seed = 1469598103934665603ull);

}  // namespace ineqgp
