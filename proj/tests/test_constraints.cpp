#include "doctest.h"

#include <Eigen/Dense>
#include <limits>
#include <random>

#include "ineqgp/constraints.hpp"
#include "ineqgp/knot_grid.hpp"

using namespace ineqgp;

namespace {
constexpr double INF = std::numeric_limits<double>::infinity();

Eigen::VectorXd random_xi(Eigen::Index m, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> nd;
    Eigen::VectorXd xi(m);
    for (Eigen::Index j = 0; j < m; ++j) xi[j] = nd(gen);
    return xi;
}
}  // namespace

TEST_CASE("bounds builds identity rows") {
    auto g = make_grid({4});
    auto sys = bounds(g, -1.0, 1.0);
    sys.validate();
    CHECK(sys.rows() == 4);
    CHECK(sys.cols() == 4);
    const Eigen::MatrixXd L = Eigen::MatrixXd(sys.lambda);
    CHECK((L - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() == 0.0);
    CHECK((sys.lower.array() == -1.0).all());
    CHECK((sys.upper.array() == 1.0).all());
    for (const auto& t : sys.tags) CHECK(t.kind == ConstraintKind::Bound);
}

TEST_CASE("one-sided bounds carry infinities") {
    auto g = make_grid({3});
    auto sys = bounds(g, 0.0, INF);
    CHECK((sys.lower.array() == 0.0).all());
    CHECK((sys.upper.array() == INF).all());
    CHECK(is_feasible(sys, Eigen::VectorXd::Constant(3, 100.0)));
    CHECK_FALSE(is_feasible(sys, Eigen::VectorXd::Constant(3, -0.1)));
}

TEST_CASE("monotone rows are consecutive differences along the right axis") {
    auto g = make_grid({3, 4});
    // along dim 0: (3-1)*4 = 8 rows of xi[i+1,j] - xi[i,j] >= 0
    auto sys = monotone(g, 0, true);
    CHECK(sys.rows() == 8);
    CHECK(sys.cols() == 12);
    Eigen::VectorXd xi(12);
    // xi(i,j) = i  -> strictly increasing along dim 0, flat along dim 1
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 4; ++j) xi[g.flat_index({i, j})] = i;
    const Eigen::VectorXd v = sys.lambda * xi;
    CHECK((v.array() == 1.0).all());
    CHECK((sys.lower.array() == 0.0).all());
    CHECK((sys.upper.array() == INF).all());
    CHECK(is_feasible(sys, xi));

    auto dec = monotone(g, 0, false);
    CHECK((dec.lower.array() == -INF).all());
    CHECK((dec.upper.array() == 0.0).all());
    CHECK_FALSE(is_feasible(dec, xi));
    CHECK(is_feasible(dec, Eigen::VectorXd(-xi)));

    // along dim 1: 3*(4-1) = 9 rows
    auto sys1 = monotone(g, 1, true);
    CHECK(sys1.rows() == 9);
    Eigen::VectorXd xj(12);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 4; ++j) xj[g.flat_index({i, j})] = 0.5 * j;
    CHECK(is_feasible(sys1, xj));
    CHECK(is_feasible(sys, xj));  // flat along dim 0 still counts as nondecreasing
    CHECK_FALSE(is_feasible(sys1, Eigen::VectorXd(-xj)));
}

TEST_CASE("monotone feasibility equals sorted knot values in 1d") {
    auto g = make_grid({6});
    auto sys = monotone(g, 0, true);
    CHECK(sys.rows() == 5);
    Eigen::VectorXd up(6), wiggle(6);
    up << -2, -1, -1, 0, 3, 3.5;
    wiggle << -2, -1, -1.5, 0, 3, 3.5;
    CHECK(is_feasible(sys, up));
    CHECK_FALSE(is_feasible(sys, wiggle));
}

TEST_CASE("convex rows are second differences") {
    auto g = make_grid({5});
    auto sys = convex(g, 0);
    CHECK(sys.rows() == 3);
    const auto pts = g.flattened_points();
    Eigen::VectorXd quad(5), cube(5);
    for (int j = 0; j < 5; ++j) {
        const double x = pts(j, 0);
        quad[j] = (x - 0.3) * (x - 0.3);
        cube[j] = -(x * x);
    }
    CHECK(is_feasible(sys, quad));
    CHECK_FALSE(is_feasible(sys, cube));
    // value v = xi[j-1] - 2 xi[j] + xi[j+1]; for x^2 on spacing h it is 2 h^2
    const Eigen::VectorXd v = sys.lambda * quad;
    CHECK(v[0] == doctest::Approx(2.0 * 0.25 * 0.25).epsilon(1e-12));
}

TEST_CASE("compose stacks systems and merges duplicate rows") {
    auto g = make_grid({4});
    auto lo = bounds(g, -1.0, INF);
    auto hi = bounds(g, -INF, 2.0);
    auto both = compose({lo, hi});
    // identical identity rows merge by interval intersection
    CHECK(both.rows() == 4);
    CHECK((both.lower.array() == -1.0).all());
    CHECK((both.upper.array() == 2.0).all());

    auto mono = monotone(g, 0, true);
    auto mixed = compose({bounds(g, -1.0, 1.0), mono});
    CHECK(mixed.rows() == 4 + 3);
    CHECK(mixed.tags.size() == 7);

    // contradictory intervals on the same row must throw
    CHECK_THROWS_AS(compose({bounds(g, 2.0, INF), bounds(g, -INF, 1.0)}), std::invalid_argument);
}

TEST_CASE("minimal monotone+bounds form has q = m+1 rows and the same feasible set") {
    auto g = make_grid({8});
    const double l = -1.0, u = 1.0;
    auto minimal = minimal_monotone_bounds(g, l, u, true);
    auto stacked = compose({bounds(g, l, u), monotone(g, 0, true)});
    CHECK(minimal.rows() == 9);
    CHECK(constraint_rank(minimal) == 8);

    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> ud(-1.05, 1.05);
    int agree = 0, feas = 0;
    for (int t = 0; t < 500; ++t) {
        Eigen::VectorXd xi(8);
        for (int j = 0; j < 8; ++j) xi[j] = ud(gen);
        if (t % 2 == 0) std::sort(xi.data(), xi.data() + 8);  // bias toward feasible
        const bool a = is_feasible(minimal, xi, 0.0);
        const bool b = is_feasible(stacked, xi, 0.0);
        if (a == b) ++agree;
        if (a) ++feas;
    }
    CHECK(agree == 500);
    CHECK(feas > 20);          // the comparison actually saw both outcomes
    CHECK(feas < 480);

    auto dec = minimal_monotone_bounds(g, l, u, false);
    Eigen::VectorXd down(8);
    down << 1, .8, .5, .5, .2, 0, -.4, -1;
    CHECK(is_feasible(dec, down));
    CHECK_FALSE(is_feasible(minimal, down));
}

TEST_CASE("check_feasible reports row, value and the violated interval") {
    auto g = make_grid({3});
    auto sys = bounds(g, 0.0, 1.0);
    Eigen::VectorXd xi(3);
    xi << 0.5, -0.2, 1.3;
    auto viol = check_feasible(sys, xi);
    REQUIRE(viol.size() == 2);
    CHECK(viol[0].row == 1);
    CHECK(viol[0].value == doctest::Approx(-0.2));
    CHECK(viol[0].lower == 0.0);
    CHECK(viol[1].row == 2);
    CHECK(viol[1].value == doctest::Approx(1.3));
    CHECK(viol[1].upper == 1.0);

    // tolerance absorbs tiny slips
    Eigen::VectorXd barely(3);
    barely << 0.0 - 1e-12, 0.5, 1.0 + 1e-12;
    CHECK(check_feasible(sys, barely).empty());
}

TEST_CASE("constraint rank of stacked redundant systems") {
    auto g = make_grid({6});
    auto sys = compose({bounds(g, -1.0, 1.0), monotone(g, 0, true)});
    // identity rows already span R^6; difference rows add nothing
    CHECK(constraint_rank(sys) == 6);
    CHECK(constraint_rank(monotone(g, 0, true)) == 5);
}

TEST_CASE("validate rejects malformed systems") {
    auto g = make_grid({3});
    auto sys = bounds(g, -1.0, 1.0);
    sys.lower[1] = 2.0;  // crossed interval
    CHECK_THROWS_AS(sys.validate(), std::invalid_argument);
    auto sys2 = bounds(g, -1.0, 1.0);
    sys2.upper.conservativeResize(2);
    CHECK_THROWS_AS(sys2.validate(), std::invalid_argument);
}
