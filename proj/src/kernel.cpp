#include "ineqgp/kernel.hpp"

#include <cmath>
#include <stdexcept>

namespace ineqgp {

const char* kernel_family_name(KernelFamily f) {
    switch (f) {
        case KernelFamily::SquaredExponential: return "se";
        case KernelFamily::Matern52: return "matern52";
        case KernelFamily::Matern32: return "matern32";
    }
    return "?";
}

KernelFamily parse_kernel_family(const std::string& name) {
    if (name == "se") return KernelFamily::SquaredExponential;
    if (name == "matern52") return KernelFamily::Matern52;
    if (name == "matern32") return KernelFamily::Matern32;
    throw std::invalid_argument("unknown kernel family '" + name + "' (expected se|matern52|matern32)");
}

void KernelSpec::validate() const {
    if (!(variance > 0.0)) throw std::invalid_argument("kernel variance must be positive");
    if (lengthscales.size() == 0) throw std::invalid_argument("kernel needs at least one lengthscale");
    for (Eigen::Index k = 0; k < lengthscales.size(); ++k)
        if (!(lengthscales[k] > 0.0)) throw std::invalid_argument("kernel lengthscales must be positive");
}

namespace detail {

static constexpr double SQRT5 = 2.23606797749978969;
static constexpr double SQRT3 = 1.73205080756887729;

double corr1d(KernelFamily f, double r, double l) {
    const double a = r / l;
    switch (f) {
        case KernelFamily::SquaredExponential:
            return std::exp(-0.5 * a * a);
        case KernelFamily::Matern52: {
            const double s = SQRT5 * a;
            return (1.0 + s + s * s / 3.0) * std::exp(-s);
        }
        case KernelFamily::Matern32: {
            const double s = SQRT3 * a;
            return (1.0 + s) * std::exp(-s);
        }
    }
    return 0.0;
}

double corr1d_dl(KernelFamily f, double r, double l) {
    const double a = r / l;
    switch (f) {
        case KernelFamily::SquaredExponential:
            return std::exp(-0.5 * a * a) * a * a / l;
        case KernelFamily::Matern52: {
            const double s = SQRT5 * a;
            return (s * s / 3.0) * (1.0 + s) * std::exp(-s) / l;
        }
        case KernelFamily::Matern32: {
            const double s = SQRT3 * a;
            return s * s * std::exp(-s) / l;
        }
    }
    return 0.0;
}

}  // namespace detail

double kernel_eval(const KernelSpec& spec, const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    spec.validate();
    if (x.size() != spec.dim() || y.size() != spec.dim())
        throw std::invalid_argument("kernel_eval: point dimension does not match the kernel");
    double c = spec.variance;
    for (int k = 0; k < spec.dim(); ++k)
        c *= detail::corr1d(spec.family, std::abs(x[k] - y[k]), spec.lengthscales[k]);
    return c;
}

Eigen::MatrixXd cross_gram(const KernelSpec& spec, const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    spec.validate();
    if (a.cols() != spec.dim() || b.cols() != spec.dim())
        throw std::invalid_argument("cross_gram: point dimension does not match the kernel");
    Eigen::MatrixXd k(a.rows(), b.rows());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < b.rows(); ++j) {
            double c = spec.variance;
            for (int d = 0; d < spec.dim(); ++d)
                c *= detail::corr1d(spec.family, std::abs(a(i, d) - b(j, d)), spec.lengthscales[d]);
            k(i, j) = c;
        }
    }
    return k;
}

Eigen::MatrixXd gram(const KernelSpec& spec, const Eigen::MatrixXd& pts) {
    spec.validate();
    if (pts.cols() != spec.dim())
        throw std::invalid_argument("gram: point dimension does not match the kernel");
    const Eigen::Index n = pts.rows();
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        k(i, i) = spec.variance;
        for (Eigen::Index j = 0; j < i; ++j) {
            double c = spec.variance;
            for (int d = 0; d < spec.dim(); ++d)
                c *= detail::corr1d(spec.family, std::abs(pts(i, d) - pts(j, d)), spec.lengthscales[d]);
            k(i, j) = c;
            k(j, i) = c;
        }
    }
    return k;
}

std::vector<Eigen::MatrixXd> gram_gradients(const KernelSpec& spec, const Eigen::MatrixXd& pts) {
    spec.validate();
    const Eigen::Index n = pts.rows();
    const int d = spec.dim();
    // per-dimension correlation matrices, so each lengthscale derivative can swap
    // one factor of the product for its derivative
    std::vector<Eigen::MatrixXd> corr(d, Eigen::MatrixXd(n, n));
    for (int k = 0; k < d; ++k)
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j <= i; ++j) {
                const double c = detail::corr1d(spec.family, std::abs(pts(i, k) - pts(j, k)),
                                                spec.lengthscales[k]);
                corr[k](i, j) = c;
                corr[k](j, i) = c;
            }

    std::vector<Eigen::MatrixXd> grads;
    grads.reserve(d + 1);
    Eigen::MatrixXd prod = Eigen::MatrixXd::Constant(n, n, 1.0);
    for (int k = 0; k < d; ++k) prod = prod.cwiseProduct(corr[k]);
    grads.push_back(prod);  // d/d variance
    for (int k = 0; k < d; ++k) {
        Eigen::MatrixXd g = Eigen::MatrixXd::Constant(n, n, spec.variance);
        for (int j = 0; j < d; ++j) {
            if (j == k) continue;
            g = g.cwiseProduct(corr[j]);
        }
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index jj = 0; jj <= i; ++jj) {
                const double dc = detail::corr1d_dl(spec.family, std::abs(pts(i, k) - pts(jj, k)),
                                                    spec.lengthscales[k]);
                g(i, jj) *= dc;  // zero on the diagonal: dc/dl vanishes at r = 0
                if (jj != i) g(jj, i) = g(i, jj);
            }
        grads.push_back(std::move(g));
    }
    return grads;
}

namespace {

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

Eigen::MatrixXd axis_corr(const KernelSpec& spec, int k, const Eigen::VectorXd& axis, bool deriv) {
    const Eigen::Index m = axis.size();
    Eigen::MatrixXd c(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j <= i; ++j) {
            const double r = std::abs(axis[i] - axis[j]);
            const double v = deriv ? detail::corr1d_dl(spec.family, r, spec.lengthscales[k])
                                   : detail::corr1d(spec.family, r, spec.lengthscales[k]);
            c(i, j) = v;
            c(j, i) = v;
        }
    return c;
}

}  // namespace

Eigen::MatrixXd gram_product_grid(const KernelSpec& spec, const std::vector<Eigen::VectorXd>& axes) {
    spec.validate();
    if (static_cast<int>(axes.size()) != spec.dim())
        throw std::invalid_argument("gram_product_grid: axis count does not match the kernel");
    Eigen::MatrixXd g = Eigen::MatrixXd::Constant(1, 1, spec.variance);
    for (int k = 0; k < spec.dim(); ++k) g = kron(g, axis_corr(spec, k, axes[k], false));
    return g;
}

std::vector<Eigen::MatrixXd> gram_product_grid_gradients(const KernelSpec& spec,
                                                         const std::vector<Eigen::VectorXd>& axes) {
    spec.validate();
    const int d = spec.dim();
    if (static_cast<int>(axes.size()) != d)
        throw std::invalid_argument("gram_product_grid_gradients: axis count does not match the kernel");
    std::vector<Eigen::MatrixXd> corr(d), dcorr(d);
    for (int k = 0; k < d; ++k) {
        corr[k] = axis_corr(spec, k, axes[k], false);
        dcorr[k] = axis_corr(spec, k, axes[k], true);
    }
    std::vector<Eigen::MatrixXd> grads;
    grads.reserve(d + 1);
    for (int which = -1; which < d; ++which) {
        Eigen::MatrixXd g = Eigen::MatrixXd::Constant(1, 1, which < 0 ? 1.0 : spec.variance);
        for (int k = 0; k < d; ++k) g = kron(g, k == which ? dcorr[k] : corr[k]);
        grads.push_back(std::move(g));
    }
    return grads;
}

}  // namespace ineqgp
