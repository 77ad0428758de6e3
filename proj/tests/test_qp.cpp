#include "doctest.h"

#include <Eigen/Dense>
#include <limits>
#include <random>

#include "ineqgp/constraints.hpp"
#include "ineqgp/knot_grid.hpp"
#include "ineqgp/posterior.hpp"
#include "ineqgp/qp.hpp"
#include "oracles.hpp"

using namespace ineqgp;

namespace {
constexpr double INF = std::numeric_limits<double>::infinity();

ConditionedGaussian make_gaussian(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov) {
    ConditionedGaussian cg;
    cg.mean = mean;
    cg.cov = cov;
    cg.chol = Eigen::LLT<Eigen::MatrixXd>(cov).matrixL();
    cg.jitter_used = 0.0;
    return cg;
}

LinearConstraintSystem make_system(const Eigen::MatrixXd& L, const Eigen::VectorXd& lo,
                                   const Eigen::VectorXd& hi) {
    LinearConstraintSystem sys;
    sys.lambda = L.sparseView();
    sys.lambda.makeCompressed();
    sys.lower = lo;
    sys.upper = hi;
    sys.tags.assign(static_cast<size_t>(L.rows()), ConstraintTag{ConstraintKind::Bound, -1});
    return sys;
}

Eigen::MatrixXd random_spd(int m, std::uint64_t seed, double base = 0.3) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> nd;
    Eigen::MatrixXd A(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) A(i, j) = nd(gen);
    return A * A.transpose() / m + base * Eigen::MatrixXd::Identity(m, m);
}

}  // namespace

TEST_CASE("feasible mean is its own mode") {
    auto g = make_grid({4});
    auto sys = bounds(g, -1.0, 1.0);
    Eigen::VectorXd mean(4);
    mean << -0.5, 0.1, 0.3, 0.9;
    auto cg = make_gaussian(mean, random_spd(4, 17));
    const auto res = solve_map(cg, sys);
    CHECK((res.mode - mean).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(res.active.empty());
    CHECK(res.kkt_residual < 1e-8);
}

TEST_CASE("independent coordinates clamp to the box") {
    auto g = make_grid({3});
    auto sys = bounds(g, -1.0, 1.0);
    Eigen::VectorXd mean(3);
    mean << -2.0, 0.4, 1.7;
    auto cg = make_gaussian(mean, Eigen::MatrixXd::Identity(3, 3));
    const auto res = solve_map(cg, sys);
    Eigen::VectorXd want(3);
    want << -1.0, 0.4, 1.0;
    CHECK((res.mode - want).cwiseAbs().maxCoeff() < 1e-9);
    // active ids are 2*row + (0 lower | 1 upper)
    REQUIRE(res.active.size() == 2);
    std::vector<int> ids = res.active;
    std::sort(ids.begin(), ids.end());
    CHECK(ids[0] == 0);      // row 0 at lower
    CHECK(ids[1] == 2 * 2 + 1);  // row 2 at upper
}

TEST_CASE("correlated clamp differs from coordinatewise clipping") {
    // strong positive correlation drags the free coordinate along
    Eigen::MatrixXd cov(2, 2);
    cov << 1.0, 0.9, 0.9, 1.0;
    Eigen::VectorXd mean(2);
    mean << 2.0, 0.0;
    Eigen::VectorXd lo = Eigen::VectorXd::Constant(2, -INF);
    Eigen::VectorXd hi = Eigen::VectorXd::Constant(2, 1.0);
    auto sys = make_system(Eigen::MatrixXd::Identity(2, 2), lo, hi);
    auto cg = make_gaussian(mean, cov);
    const auto res = solve_map(cg, sys);
    // conditional argmax: x1 = 1, x2 = mean2 + 0.9 * (1 - mean1) = -0.9
    CHECK(res.mode[0] == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(res.mode[1] == doctest::Approx(-0.9).epsilon(1e-7));
}

TEST_CASE("agrees with brute-force enumeration on random instances") {
    std::mt19937_64 gen(99);
    std::normal_distribution<double> nd;
    std::uniform_real_distribution<double> u(0.2, 1.0);
    for (int trial = 0; trial < 12; ++trial) {
        const int m = 3;
        const int q = 4;
        const Eigen::MatrixXd cov = random_spd(m, 1000 + trial);
        Eigen::VectorXd mean(m);
        for (int j = 0; j < m; ++j) mean[j] = 2.0 * nd(gen);
        Eigen::MatrixXd A(q, m);
        for (int i = 0; i < q; ++i)
            for (int j = 0; j < m; ++j) A(i, j) = nd(gen);
        // anchor the box on a known interior point so the instance is feasible
        Eigen::VectorXd x0(m);
        for (int j = 0; j < m; ++j) x0[j] = nd(gen);
        const Eigen::VectorXd Ax0 = A * x0;
        Eigen::VectorXd lo(q), hi(q);
        for (int i = 0; i < q; ++i) {
            lo[i] = Ax0[i] - u(gen);
            hi[i] = Ax0[i] + u(gen);
        }
        auto cg = make_gaussian(mean, cov);
        auto sys = make_system(A, lo, hi);
        const auto res = solve_map(cg, sys);
        const Eigen::MatrixXd P = cov.inverse();
        const Eigen::VectorXd ref = oracle::qp_enumerate(mean, P, A, lo, hi);
        CHECK((res.mode - ref).cwiseAbs().maxCoeff() < 1e-6);
        CHECK(is_feasible(sys, res.mode, 1e-7));
        CHECK(res.kkt_residual < 1e-6);
    }
}

TEST_CASE("monotone projection of a decreasing mean") {
    auto g = make_grid({5});
    auto sys = monotone(g, 0, true);
    Eigen::VectorXd mean(5);
    mean << 1.0, 0.6, 0.8, 0.2, 0.4;  // two violations
    auto cg = make_gaussian(mean, Eigen::MatrixXd::Identity(5, 5));
    const auto res = solve_map(cg, sys);
    CHECK(is_feasible(sys, res.mode, 1e-8));
    // identity covariance makes this the isotonic regression of mean
    const Eigen::MatrixXd A = Eigen::MatrixXd(sys.lambda);
    const Eigen::VectorXd ref =
        oracle::qp_enumerate(mean, Eigen::MatrixXd::Identity(5, 5), A, sys.lower, sys.upper);
    CHECK((res.mode - ref).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("warm start reproduces the cold solution") {
    const Eigen::MatrixXd cov = random_spd(4, 7);
    Eigen::VectorXd mean(4);
    mean << 3.0, -2.5, 1.5, -1.0;
    auto g = make_grid({4});
    auto sys = bounds(g, -1.0, 1.0);
    auto cg = make_gaussian(mean, cov);
    const auto cold = solve_map(cg, sys);
    const auto warm = solve_map(cg, sys, &cold.active);
    CHECK((cold.mode - warm.mode).cwiseAbs().maxCoeff() < 1e-9);
    std::vector<int> a = cold.active, b = warm.active;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    CHECK(a == b);
}

TEST_CASE("variational certificate is nonpositive over the feasible box") {
    const Eigen::MatrixXd cov = random_spd(3, 13);
    Eigen::VectorXd mean(3);
    mean << 2.0, -1.8, 0.9;
    auto g = make_grid({3});
    auto sys = bounds(g, -1.0, 1.0);
    auto cg = make_gaussian(mean, cov);
    const auto res = solve_map(cg, sys);
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst = -INF;
    for (int t = 0; t < 2000; ++t) {
        Eigen::VectorXd z(3);
        z << u(gen), u(gen), u(gen);
        worst = std::max(worst, variational_gap(cg, res.mode, z));
    }
    CHECK(worst <= 1e-8);
    // and strictly positive somewhere outside when the mean is infeasible
    CHECK(variational_gap(cg, res.mode, mean) > 0.0);
}

TEST_CASE("projected gradient fallback lands on the same mode") {
    for (int trial = 0; trial < 4; ++trial) {
        const Eigen::MatrixXd cov = random_spd(5, 300 + trial);
        std::mt19937_64 gen(40 + trial);
        std::normal_distribution<double> nd;
        Eigen::VectorXd mean(5);
        for (int j = 0; j < 5; ++j) mean[j] = 1.5 * nd(gen);
        auto g = make_grid({5});
        auto sys = compose({bounds(g, -1.0, 1.0), monotone(g, 0, true)});
        auto cg = make_gaussian(mean, cov);
        const auto gi = solve_map(cg, sys);
        const auto pg = detail::solve_map_projected_gradient(cg, sys);
        CHECK(is_feasible(sys, pg.mode, 1e-6));
        CHECK((gi.mode - pg.mode).cwiseAbs().maxCoeff() < 1e-5);
    }
}

TEST_CASE("equality-pinned row is handled") {
    // zero-width interval forces lambda xi = c exactly
    Eigen::MatrixXd A(1, 2);
    A << 0.2, 0.8;
    Eigen::VectorXd lo(1), hi(1);
    lo << -0.5;
    hi << -0.5;
    Eigen::VectorXd mean(2);
    mean << 0.3, 0.3;
    auto cg = make_gaussian(mean, random_spd(2, 55));
    auto sys = make_system(A, lo, hi);
    const auto res = solve_map(cg, sys);
    CHECK((A * res.mode)(0) == doctest::Approx(-0.5).epsilon(1e-8));
    CHECK(res.kkt_residual < 1e-7);
}

TEST_CASE("active rows listed once per row") {
    Eigen::VectorXd mean(3);
    mean << -4.0, -4.0, -4.0;
    auto g = make_grid({3});
    auto sys = bounds(g, -1.0, 1.0);
    auto cg = make_gaussian(mean, Eigen::MatrixXd::Identity(3, 3));
    const auto res = solve_map(cg, sys);
    CHECK(res.active_rows.size() == 3);
    std::vector<Eigen::Index> rows = res.active_rows;
    std::sort(rows.begin(), rows.end());
    CHECK(rows == std::vector<Eigen::Index>{0, 1, 2});
    for (int id : res.active) CHECK(id % 2 == 0);  // all at lower side
}
