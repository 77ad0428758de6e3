#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace ineqgp {

enum class KernelFamily { SquaredExponential, Matern52, Matern32 };

const char* kernel_family_name(KernelFamily f);           // "se" | "matern52" | "matern32"
KernelFamily parse_kernel_family(const std::string& name);

// Stationary product kernel: k(x, x') = variance * prod_k c(|x_k - x'_k| / l_k),
// one lengthscale per input dimension, a single shared variance.
struct KernelSpec {
    KernelFamily family = KernelFamily::Matern52;
    double variance = 1.0;
    Eigen::VectorXd lengthscales;

    int dim() const { return static_cast<int>(lengthscales.size()); }
    void validate() const;  // throws std::invalid_argument on non-positive parameters
};

double kernel_eval(const KernelSpec& spec, const Eigen::VectorXd& x, const Eigen::VectorXd& y);

// Gram matrix over the rows of `pts` (n x d). Symmetric, unit diagonal times variance.
Eigen::MatrixXd gram(const KernelSpec& spec, const Eigen::MatrixXd& pts);

Eigen::MatrixXd cross_gram(const KernelSpec& spec, const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

// Derivatives of gram(spec, pts) w.r.t. (variance, l_1, ..., l_d), in that order.
std::vector<Eigen::MatrixXd> gram_gradients(const KernelSpec& spec, const Eigen::MatrixXd& pts);

// Fast path for tensor-product grids: the Gram matrix over the cartesian product
// of `axes` (last axis fastest) is the Kronecker product of per-axis Gram matrices.
Eigen::MatrixXd gram_product_grid(const KernelSpec& spec, const std::vector<Eigen::VectorXd>& axes);
std::vector<Eigen::MatrixXd> gram_product_grid_gradients(const KernelSpec& spec,
                                                         const std::vector<Eigen::VectorXd>& axes);

namespace detail {
// 1D correlation c(r; l) with c(0) = 1, and its derivative w.r.t. the lengthscale.
double corr1d(KernelFamily f, double r, double l);
double corr1d_dl(KernelFamily f, double r, double l);
}  // namespace detail

}  // namespace ineqgp
