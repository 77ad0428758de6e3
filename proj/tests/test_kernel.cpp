#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>

#include "ineqgp/kernel.hpp"
#include "oracles.hpp"

using namespace ineqgp;

namespace {

KernelSpec make_spec(KernelFamily f, double var, std::initializer_list<double> ells) {
    KernelSpec s;
    s.family = f;
    s.variance = var;
    s.lengthscales = Eigen::VectorXd(static_cast<Eigen::Index>(ells.size()));
    Eigen::Index i = 0;
    for (double l : ells) s.lengthscales[i++] = l;
    return s;
}

Eigen::MatrixXd random_points(int n, int d, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::MatrixXd pts(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) pts(i, j) = u(gen);
    return pts;
}

}  // namespace

TEST_CASE("squared exponential closed form") {
    auto s = make_spec(KernelFamily::SquaredExponential, 2.0, {0.5});
    Eigen::VectorXd x(1), y(1);
    x << 0.1;
    y << 0.35;
    // r = 0.25, l = 0.5: 2 * exp(-r^2 / (2 l^2)) = 2 * exp(-0.125)
    CHECK(kernel_eval(s, x, y) == doctest::Approx(2.0 * std::exp(-0.125)).epsilon(1e-12));
    CHECK(kernel_eval(s, x, x) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("matern 5/2 closed form") {
    auto s = make_spec(KernelFamily::Matern52, 1.0, {1.0});
    Eigen::VectorXd x(1), y(1);
    x << 0.0;
    y << 1.0;
    const double t = std::sqrt(5.0);
    const double expect = (1.0 + t + 5.0 / 3.0) * std::exp(-t);
    CHECK(kernel_eval(s, x, y) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("matern 3/2 closed form") {
    auto s = make_spec(KernelFamily::Matern32, 3.0, {0.2});
    Eigen::VectorXd x(1), y(1);
    x << 0.4;
    y << 0.5;
    const double t = std::sqrt(3.0) * 0.1 / 0.2;
    CHECK(kernel_eval(s, x, y) == doctest::Approx(3.0 * (1.0 + t) * std::exp(-t)).epsilon(1e-12));
}

TEST_CASE("product over dimensions with per-dimension lengthscales") {
    auto s = make_spec(KernelFamily::Matern52, 1.7, {0.3, 0.9});
    Eigen::VectorXd x(2), y(2);
    x << 0.2, 0.8;
    y << 0.5, 0.1;
    auto s1 = make_spec(KernelFamily::Matern52, 1.0, {0.3});
    auto s2 = make_spec(KernelFamily::Matern52, 1.0, {0.9});
    Eigen::VectorXd a(1), b(1);
    a << 0.2;
    b << 0.5;
    const double k1 = kernel_eval(s1, a, b);
    a << 0.8;
    b << 0.1;
    const double k2 = kernel_eval(s2, a, b);
    CHECK(kernel_eval(s, x, y) == doctest::Approx(1.7 * k1 * k2).epsilon(1e-12));
}

TEST_CASE("gram matches pairwise eval, is symmetric and positive semidefinite") {
    for (auto fam : {KernelFamily::SquaredExponential, KernelFamily::Matern52, KernelFamily::Matern32}) {
        auto s = make_spec(fam, 1.3, {0.4, 0.7});
        const Eigen::MatrixXd pts = random_points(12, 2, 42);
        const Eigen::MatrixXd G = gram(s, pts);
        REQUIRE(G.rows() == 12);
        for (int i = 0; i < 12; ++i) {
            CHECK(G(i, i) == doctest::Approx(1.3).epsilon(1e-12));
            for (int j = 0; j < 12; ++j) {
                CHECK(G(i, j) == doctest::Approx(kernel_eval(s, pts.row(i), pts.row(j))).epsilon(1e-12));
                CHECK(G(i, j) == doctest::Approx(G(j, i)).epsilon(1e-14));
            }
        }
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(G);
        CHECK(eig.eigenvalues().minCoeff() >= -1e-10 * s.variance);
    }
}

TEST_CASE("cross_gram agrees with gram on stacked points") {
    auto s = make_spec(KernelFamily::Matern32, 0.8, {0.25, 0.6, 1.1});
    const Eigen::MatrixXd a = random_points(5, 3, 1);
    const Eigen::MatrixXd b = random_points(7, 3, 2);
    const Eigen::MatrixXd C = cross_gram(s, a, b);
    REQUIRE(C.rows() == 5);
    REQUIRE(C.cols() == 7);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 7; ++j)
            CHECK(C(i, j) == doctest::Approx(kernel_eval(s, a.row(i), b.row(j))).epsilon(1e-12));
}

TEST_CASE("gram gradients match finite differences") {
    for (auto fam : {KernelFamily::SquaredExponential, KernelFamily::Matern52, KernelFamily::Matern32}) {
        auto s = make_spec(fam, 1.5, {0.35, 0.8});
        const Eigen::MatrixXd pts = random_points(6, 2, 77);
        const auto grads = gram_gradients(s, pts);
        REQUIRE(grads.size() == 3);  // variance, l1, l2

        // variance derivative is the correlation matrix itself
        const Eigen::MatrixXd corr = gram(s, pts) / s.variance;
        CHECK((grads[0] - corr).cwiseAbs().maxCoeff() < 1e-12);

        for (int k = 0; k < 2; ++k) {
            const double h = 1e-6;
            auto hi = s, lo = s;
            hi.lengthscales[k] += h;
            lo.lengthscales[k] -= h;
            const Eigen::MatrixXd fd = (gram(hi, pts) - gram(lo, pts)) / (2.0 * h);
            CHECK((grads[size_t(k + 1)] - fd).cwiseAbs().maxCoeff() < 1e-6);
        }
    }
}

TEST_CASE("product-grid gram equals dense gram on the flattened grid") {
    auto s = make_spec(KernelFamily::Matern52, 2.2, {0.3, 0.5, 0.9});
    std::vector<Eigen::VectorXd> axes(3);
    axes[0] = Eigen::VectorXd::LinSpaced(3, 0.0, 1.0);
    axes[1] = Eigen::VectorXd::LinSpaced(4, 0.0, 1.0);
    axes[2] = Eigen::VectorXd::LinSpaced(2, 0.0, 1.0);

    // flatten row-major, last axis fastest
    Eigen::MatrixXd pts(3 * 4 * 2, 3);
    int r = 0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 4; ++j)
            for (int k = 0; k < 2; ++k) {
                pts(r, 0) = axes[0][i];
                pts(r, 1) = axes[1][j];
                pts(r, 2) = axes[2][k];
                ++r;
            }

    const Eigen::MatrixXd fast = gram_product_grid(s, axes);
    const Eigen::MatrixXd dense = gram(s, pts);
    REQUIRE(fast.rows() == dense.rows());
    CHECK((fast - dense).cwiseAbs().maxCoeff() < 1e-11);

    const auto fast_g = gram_product_grid_gradients(s, axes);
    const auto dense_g = gram_gradients(s, pts);
    REQUIRE(fast_g.size() == dense_g.size());
    for (size_t t = 0; t < fast_g.size(); ++t)
        CHECK((fast_g[t] - dense_g[t]).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("corr1d lengthscale derivative matches finite differences near zero distance") {
    // r = 0 must give derivative exactly zero for all families
    for (auto fam : {KernelFamily::SquaredExponential, KernelFamily::Matern52, KernelFamily::Matern32}) {
        CHECK(detail::corr1d(fam, 0.0, 0.7) == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(detail::corr1d_dl(fam, 0.0, 0.7) == doctest::Approx(0.0).epsilon(1e-15));
        for (double rr : {1e-3, 0.1, 0.6, 2.5}) {
            const double h = 1e-6;
            const double fd =
                (detail::corr1d(fam, rr, 0.7 + h) - detail::corr1d(fam, rr, 0.7 - h)) / (2.0 * h);
            CHECK(detail::corr1d_dl(fam, rr, 0.7) == doctest::Approx(fd).epsilon(1e-5));
        }
    }
}

TEST_CASE("limits: tiny lengthscale decorrelates, huge lengthscale saturates") {
    const Eigen::MatrixXd pts = random_points(5, 1, 9);
    auto tiny = make_spec(KernelFamily::SquaredExponential, 1.0, {1e-4});
    auto huge = make_spec(KernelFamily::SquaredExponential, 1.0, {1e4});
    const Eigen::MatrixXd Gt = gram(tiny, pts);
    const Eigen::MatrixXd Gh = gram(huge, pts);
    CHECK((Gt - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((Gh - Eigen::MatrixXd::Ones(5, 5)).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("spec validation rejects non-positive parameters") {
    auto s = make_spec(KernelFamily::Matern52, 1.0, {0.5});
    CHECK_NOTHROW(s.validate());
    s.variance = 0.0;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s.variance = 1.0;
    s.lengthscales[0] = -0.1;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}

TEST_CASE("family names round-trip") {
    CHECK(parse_kernel_family("se") == KernelFamily::SquaredExponential);
    CHECK(parse_kernel_family("matern52") == KernelFamily::Matern52);
    CHECK(parse_kernel_family("matern32") == KernelFamily::Matern32);
    CHECK(std::string(kernel_family_name(KernelFamily::Matern52)) == "matern52");
    CHECK_THROWS_AS(parse_kernel_family("cubic"), std::invalid_argument);
}
