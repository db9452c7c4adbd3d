#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "quantshape/solvers.hpp"

using namespace quantshape;

TEST_CASE("LP optimum matches vertex enumeration on random small problems") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 100; ++trial) {
        const auto lp = oracle::random_small_lp(rng);
        REQUIRE(lp.feasible);
        const auto s = solve_lp(lp.problem);
        REQUIRE(s.optimal());
        CHECK(s.objective == doctest::Approx(lp.optimum).epsilon(1e-6).scale(1.0));
        CHECK(lp.problem.max_violation(s.x) <= 1e-9);
    }
}

TEST_CASE("LP with equality rows and free variables") {
    // min x + 2y + 3z s.t. x + y + z = 1, x - y = 0.2, z >= 0.1, x, y free
    LpProblem lp(3);
    lp.objective << 1.0, 2.0, 3.0;
    lp.lower << -kInf, -kInf, 0.1;
    lp.add_constraint(Vector::Ones(3), Relation::Equal, 1.0);
    lp.add_constraint((Vector(3) << 1.0, -1.0, 0.0).finished(), Relation::Equal, 0.2);
    lp.add_constraint((Vector(3) << 1.0, 0.0, 0.0).finished(), Relation::LessEqual, 10.0);
    const auto s = solve_lp(lp);
    REQUIRE(s.optimal());
    // x = y + 0.2, 2y + 0.2 + z = 1 -> cost = 3y + 0.2 + 3z, z = 0.8 - 2y -> cost = 2.6 - 3y; y maximal with x <= 10
    // and z >= 0.1: y <= 0.35
    CHECK(s.x(1) == doctest::Approx(0.35));
    CHECK(s.objective == doctest::Approx(2.6 - 3 * 0.35));
}

TEST_CASE("LP reports infeasible and unbounded problems") {
    LpProblem bad(2);
    bad.add_constraint(Vector::Ones(2), Relation::LessEqual, -1.0);
    CHECK(solve_lp(bad).outcome == SolverOutcome::Infeasible);

    LpProblem open(2);
    open.objective << -1.0, 0.0;
    open.add_constraint((Vector(2) << 0.0, 1.0).finished(), Relation::LessEqual, 1.0);
    CHECK(solve_lp(open).outcome == SolverOutcome::Unbounded);
}

TEST_CASE("LP duals are objective sensitivities to the right-hand sides") {
    std::mt19937_64 rng(99);
    int             checked = 0;
    for (int trial = 0; trial < 30; ++trial) {
        auto       lp = oracle::random_small_lp(rng);
        const auto base = solve_lp(lp.problem);
        REQUIRE(base.optimal());
        REQUIRE(base.duals.size() == static_cast<Eigen::Index>(lp.problem.constraints.size()));
        for (std::size_t i = 0; i < lp.problem.constraints.size(); ++i) {
            const double h = 1e-6;
            auto         up = lp.problem;
            auto         dn = lp.problem;
            up.constraints[i].rhs += h;
            dn.constraints[i].rhs -= h;
            const auto su = solve_lp(up);
            const auto sd = solve_lp(dn);
            if (!su.optimal() || !sd.optimal()) continue;
            const double fd_up = (su.objective - base.objective) / h;
            const double fd_dn = (base.objective - sd.objective) / h;
            // away from a breakpoint both one-sided differences agree with the dual
            if (std::abs(fd_up - fd_dn) > 1e-6) continue;
            CHECK(base.duals(static_cast<Eigen::Index>(i)) == doctest::Approx(fd_up).epsilon(1e-5).scale(1.0));
            ++checked;
        }
    }
    CHECK(checked > 50);
}

TEST_CASE("LP validation") {
    LpProblem lp(2);
    lp.lower(0) = 1.0;
    lp.upper(0) = 0.0;
    CHECK_THROWS_AS(solve_lp(lp), std::invalid_argument);
    LpProblem wrong(2);
    wrong.add_constraint(Vector::Ones(3), Relation::LessEqual, 1.0);
    CHECK_THROWS_AS(solve_lp(wrong), std::invalid_argument);
}

TEST_CASE("degenerate LP terminates") {
    // Many constraints active at the optimum x = 0.
    LpProblem lp(3);
    lp.objective << -1.0, -1.0, -1.0;
    lp.lower.setConstant(-kInf);
    for (int i = 0; i < 12; ++i) {
        Vector a(3);
        a << std::cos(i), std::sin(i), 1.0;
        lp.add_constraint(a, Relation::LessEqual, 0.0);
    }
    lp.add_constraint(Vector::Ones(3), Relation::GreaterEqual, -5.0);
    const auto s = solve_lp(lp);
    CHECK(s.outcome != SolverOutcome::MaxIter);
}
