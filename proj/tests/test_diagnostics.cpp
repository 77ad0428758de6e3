#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "ineqgp/diagnostics.hpp"
#include "oracles.hpp"

using namespace ineqgp;

TEST_CASE("ess of iid noise is close to the sample size") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull}) {
        const auto x = oracle::ar1_series(20000, 0.0, seed);
        bool degen = false;
        const double e = ess(x, &degen);
        CHECK_FALSE(degen);
        CHECK(e > 0.9 * 20000);
        CHECK(e < 1.1 * 20000);
    }
}

TEST_CASE("ess tracks the ar(1) formula across correlation levels") {
    for (double rho : {0.3, 0.6, 0.9}) {
        double ratio_sum = 0.0;
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            const auto x = oracle::ar1_series(40000, rho, 100 + seed);
            const double truth = 40000.0 * (1.0 - rho) / (1.0 + rho);
            ratio_sum += ess(x) / truth;
        }
        const double mean_ratio = ratio_sum / 5.0;
        CHECK(mean_ratio > 0.75);
        CHECK(mean_ratio < 1.25);
    }
}

TEST_CASE("anticorrelated series caps at the sample size") {
    // the estimator clamps to [1, n]; a rho < 0 chain would otherwise exceed n
    const auto x = oracle::ar1_series(20000, -0.5, 9);
    CHECK(ess(x) == doctest::Approx(20000.0));
}

TEST_CASE("constant series is flagged degenerate") {
    Eigen::VectorXd c = Eigen::VectorXd::Constant(500, 3.7);
    bool degen = false;
    const double e = ess(c, &degen);
    CHECK(degen);
    CHECK(e == doctest::Approx(500.0));
    // the flag pointer is optional
    CHECK_NOTHROW(ess(c));
}

TEST_CASE("short series are rejected") {
    Eigen::VectorXd tiny(5);
    tiny << 1, 2, 3, 4, 5;
    CHECK_THROWS_AS(ess(tiny), std::invalid_argument);
}

TEST_CASE("ess_report summarizes per-coordinate mixing") {
    const Eigen::Index n = 10000;
    Eigen::MatrixXd draws(n, 3);
    draws.col(0) = oracle::ar1_series(n, 0.0, 11);   // mixes freely
    draws.col(1) = oracle::ar1_series(n, 0.9, 12);   // sticky
    draws.col(2) = oracle::ar1_series(n, 0.5, 13);   // in between
    const auto rep = ess_report(draws, 2.0);
    REQUIRE(rep.per_coordinate.size() == 3);
    CHECK(rep.per_coordinate[1] < rep.per_coordinate[2]);
    CHECK(rep.per_coordinate[2] < rep.per_coordinate[0]);
    // q10 <= q50 <= q90 by construction
    CHECK(rep.q10 <= rep.q50);
    CHECK(rep.q50 <= rep.q90);
    // with three coordinates the quantiles interpolate between sorted values
    CHECK(rep.q10 >= rep.per_coordinate.minCoeff() - 1e-9);
    CHECK(rep.q90 <= rep.per_coordinate.maxCoeff() + 1e-9);
    CHECK(rep.wall_seconds == 2.0);
    CHECK(rep.tn_ess == doctest::Approx(rep.q10 / 2.0));
}

TEST_CASE("q2 score") {
    Eigen::VectorXd truth(5), pred(5);
    truth << 1, 2, 3, 4, 5;
    pred = truth;
    CHECK(q2(truth, pred) == doctest::Approx(1.0));
    // predicting the mean scores zero
    CHECK(q2(truth, Eigen::VectorXd::Constant(5, 3.0)) == doctest::Approx(0.0));
    // worse than the mean goes negative
    Eigen::VectorXd bad(5);
    bad << 5, 4, 3, 2, 1;
    CHECK(q2(truth, bad) < 0.0);
    // hand value: pred off by +1 everywhere -> 1 - 5/10
    CHECK(q2(truth, truth.array() + 1.0) == doctest::Approx(1.0 - 5.0 / 10.0));
}

TEST_CASE("type-7 quantile matches hand calculations") {
    Eigen::VectorXd v(5);
    v << 10, 20, 30, 40, 50;
    CHECK(quantile(v, 0.0) == doctest::Approx(10.0));
    CHECK(quantile(v, 1.0) == doctest::Approx(50.0));
    CHECK(quantile(v, 0.5) == doctest::Approx(30.0));
    // h = (5-1)*0.25 = 1 -> exactly the second order statistic
    CHECK(quantile(v, 0.25) == doctest::Approx(20.0));
    // h = 4*0.1 = 0.4 -> 10 + 0.4*(20-10)
    CHECK(quantile(v, 0.1) == doctest::Approx(14.0));
    // unsorted input is handled
    Eigen::VectorXd shuffled(5);
    shuffled << 30, 10, 50, 20, 40;
    CHECK(quantile(shuffled, 0.5) == doctest::Approx(30.0));
    // interpolation between order statistics
    Eigen::VectorXd pair(2);
    pair << 0.0, 1.0;
    CHECK(quantile(pair, 0.75) == doctest::Approx(0.75));
}

TEST_CASE("ess is invariant to affine rescaling") {
    const auto x = oracle::ar1_series(20000, 0.7, 21);
    const double base = ess(x);
    const Eigen::VectorXd scaled = 250.0 * x.array() - 3.0;
    CHECK(ess(scaled) == doctest::Approx(base).epsilon(1e-10));
}
