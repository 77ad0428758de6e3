#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "ineqgp/hyperparam.hpp"
#include "ineqgp/knot_grid.hpp"
#include "ineqgp/posterior.hpp"

using namespace ineqgp;

namespace {

struct Data {
    KnotGrid grid;
    SparseRowMat phi;
    Eigen::VectorXd y;
};

// Smooth 1d target with controlled noise, dense enough that the likelihood has
// a real interior optimum.
Data smooth_data(int m, int n, double noise_sd, std::uint64_t seed) {
    Data d;
    d.grid = make_grid({m});
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> nd;
    Eigen::MatrixXd pts(n, 1);
    d.y.resize(n);
    for (int i = 0; i < n; ++i) {
        pts(i, 0) = u(gen);
        d.y[i] = std::sin(6.0 * pts(i, 0)) + noise_sd * nd(gen);
    }
    d.phi = design_matrix(d.grid, pts);
    return d;
}

}  // namespace

TEST_CASE("fully fixed parameters short-circuit the optimizer") {
    auto d = smooth_data(15, 30, 0.1, 1);
    FixedParams fixed;
    fixed.variance = 1.3;
    fixed.lengthscales = {0.4};
    fixed.tau2 = 0.01;
    FitOptions opts;
    const auto res = fit_ml(KernelFamily::Matern52, d.grid, d.phi, d.y, fixed, opts);
    CHECK(res.kernel.variance == 1.3);
    CHECK(res.kernel.lengthscales[0] == 0.4);
    CHECK(res.tau2 == 0.01);
    CHECK(res.evaluations == 1);  // one likelihood call to report loglik, no search
    const auto ml = log_marginal_likelihood(res.kernel, d.grid, d.phi, d.y, 0.01);
    CHECK(res.loglik == doctest::Approx(ml.value).epsilon(1e-12));
}

TEST_CASE("partial fixing holds the pinned values and moves the rest") {
    auto d = smooth_data(20, 60, 0.15, 2);
    FixedParams fixed;
    fixed.tau2 = 0.0225;
    FitOptions opts;
    opts.starts = 4;
    opts.max_iters = 40;
    const auto res = fit_ml(KernelFamily::Matern52, d.grid, d.phi, d.y, fixed, opts);
    CHECK(res.tau2 == 0.0225);
    CHECK(res.kernel.variance > 0.0);
    CHECK(res.kernel.lengthscales[0] > 0.0);

    // the optimum must beat a deliberately bad parameter point
    KernelSpec bad = res.kernel;
    bad.lengthscales[0] = 5.0;
    bad.variance = 0.01;
    const auto worse = log_marginal_likelihood(bad, d.grid, d.phi, d.y, 0.0225);
    CHECK(res.loglik > worse.value);
}

TEST_CASE("fitted optimum is a stationary point of the free parameters") {
    auto d = smooth_data(18, 80, 0.1, 3);
    FixedParams fixed;  // everything free
    FitOptions opts;
    opts.starts = 6;
    const auto res = fit_ml(KernelFamily::SquaredExponential, d.grid, d.phi, d.y, fixed, opts);
    const auto ml = log_marginal_likelihood(res.kernel, d.grid, d.phi, d.y, res.tau2);
    // gradients in log space: d/dlog(theta) = theta * d/dtheta; interior optima
    // should be near-stationary, box-edge optima have one-sided slack
    const double gv = std::abs(res.kernel.variance * ml.d_variance);
    const double gl = std::abs(res.kernel.lengthscales[0] * ml.d_lengthscales[0]);
    CHECK(gv < 5e-3 * std::max(1.0, std::abs(ml.value)));
    CHECK(gl < 5e-3 * std::max(1.0, std::abs(ml.value)));
}

TEST_CASE("more starts never hurt the objective") {
    auto d = smooth_data(15, 50, 0.2, 4);
    FitOptions few, many;
    few.starts = 1;
    few.max_iters = 30;
    many.starts = 6;
    many.max_iters = 30;
    const auto a = fit_ml(KernelFamily::Matern32, d.grid, d.phi, d.y, {}, few);
    const auto b = fit_ml(KernelFamily::Matern32, d.grid, d.phi, d.y, {}, many);
    CHECK(b.loglik >= a.loglik - 1e-9);
    CHECK(b.best_start >= 0);
    CHECK(b.best_start < 6);
    CHECK(b.evaluations > a.evaluations);
}

TEST_CASE("noise level is recovered within a factor on well-identified data") {
    // lots of replicated structure: tau2 is identifiable here
    const double noise_sd = 0.3;
    auto d = smooth_data(12, 400, noise_sd, 5);
    FitOptions opts;
    opts.starts = 6;
    const auto res = fit_ml(KernelFamily::Matern52, d.grid, d.phi, d.y, {}, opts);
    CHECK(res.tau2 > 0.25 * noise_sd * noise_sd);
    CHECK(res.tau2 < 4.0 * noise_sd * noise_sd);
}

TEST_CASE("deterministic given the seed") {
    auto d = smooth_data(15, 40, 0.1, 6);
    FitOptions opts;
    opts.starts = 3;
    const auto a = fit_ml(KernelFamily::Matern52, d.grid, d.phi, d.y, {}, opts);
    const auto b = fit_ml(KernelFamily::Matern52, d.grid, d.phi, d.y, {}, opts);
    CHECK(a.kernel.variance == b.kernel.variance);
    CHECK(a.kernel.lengthscales[0] == b.kernel.lengthscales[0]);
    CHECK(a.tau2 == b.tau2);
    CHECK(a.loglik == b.loglik);
}

TEST_CASE("fixed noise at zero with coincident points fails loudly") {
    // two observations at the same x with different y cannot be interpolated:
    // the noise-free marginal is singular and the failure must name tau2
    auto grid = make_grid({8});
    Eigen::MatrixXd pts(2, 1);
    pts << 0.4, 0.4;
    Eigen::VectorXd y(2);
    y << 0.0, 1.0;
    const auto phi = design_matrix(grid, pts);
    FixedParams fixed;
    fixed.variance = 1.0;
    fixed.lengthscales = {0.5};
    fixed.tau2 = 0.0;
    try {
        fit_ml(KernelFamily::Matern52, grid, phi, y, fixed);
        FAIL("expected failure for a singular noise-free marginal");
    } catch (const std::exception& e) {
        CHECK(std::string(e.what()).find("tau2") != std::string::npos);
    }
}

TEST_CASE("per-dimension lengthscales separate anisotropic data") {
    // y varies fast in x1, slowly in x2; fitted lengthscales should order that way
    auto grid = make_grid({8, 8});
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> nd;
    const int n = 200;
    Eigen::MatrixXd pts(n, 2);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        pts(i, 0) = u(gen);
        pts(i, 1) = u(gen);
        y[i] = std::sin(9.0 * pts(i, 0)) + 0.3 * pts(i, 1) + 0.05 * nd(gen);
    }
    const auto phi = design_matrix(grid, pts);
    FitOptions opts;
    opts.starts = 6;
    opts.max_iters = 60;
    const auto res = fit_ml(KernelFamily::Matern52, grid, phi, y, {}, opts);
    REQUIRE(res.kernel.lengthscales.size() == 2);
    CHECK(res.kernel.lengthscales[0] < res.kernel.lengthscales[1]);
}

TEST_CASE("mixed fixed lengthscale vector") {
    auto grid = make_grid({6, 6});
    std::mt19937_64 gen(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int n = 80;
    Eigen::MatrixXd pts(n, 2);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        pts(i, 0) = u(gen);
        pts(i, 1) = u(gen);
        y[i] = pts(i, 0) + pts(i, 1);
    }
    const auto phi = design_matrix(grid, pts);
    FixedParams fixed;
    fixed.lengthscales = {std::optional<double>{0.7}, std::nullopt};
    FitOptions opts;
    opts.starts = 3;
    opts.max_iters = 30;
    const auto res = fit_ml(KernelFamily::Matern52, grid, phi, y, fixed, opts);
    CHECK(res.kernel.lengthscales[0] == 0.7);
    CHECK(res.kernel.lengthscales[1] > 0.0);
    CHECK(res.kernel.lengthscales[1] != 0.7);
}
