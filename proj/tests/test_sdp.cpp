#include <cmath>
#include <random>

#include "doctest.h"
#include "quantshape/solvers.hpp"

using namespace quantshape;

namespace {

LmiBlock block(Eigen::MatrixXd constant, std::vector<Eigen::MatrixXd> coeffs) { return {std::move(constant), std::move(coeffs)}; }

}  // namespace

TEST_CASE("SDP: smallest x with [[x, 1], [1, x]] >= 0 is 1") {
    SdpProblem p;
    p.objective = Eigen::VectorXd::Ones(1);
    Eigen::MatrixXd c(2, 2);
    c << 0, 1, 1, 0;
    p.blocks.push_back(block(c, {Eigen::MatrixXd::Identity(2, 2)}));
    const auto s = solve_sdp(p);
    REQUIRE(s.optimal());
    CHECK(s.x(0) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(p.min_eigenvalue(s.x) >= -1e-9);
}

TEST_CASE("SDP: largest eigenvalue of a symmetric 2x2 from the quadratic formula") {
    std::mt19937_64                        rng(5);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int trial = 0; trial < 10; ++trial) {
        const double a = u(rng), b = u(rng), d = u(rng);
        Eigen::MatrixXd m(2, 2);
        m << a, b, b, d;
        const double lmax = 0.5 * (a + d) + std::sqrt(0.25 * (a - d) * (a - d) + b * b);
        SdpProblem   p;
        p.objective = Eigen::VectorXd::Ones(1);
        p.blocks.push_back(block(-m, {Eigen::MatrixXd::Identity(2, 2)}));
        const auto s = solve_sdp(p);
        REQUIRE(s.optimal());
        CHECK(s.objective == doctest::Approx(lmax).epsilon(1e-6).scale(1.0));
    }
}

TEST_CASE("SDP: a linear program written as 1x1 blocks") {
    // min -x - y s.t. x >= 0, y >= 0, x + 2y <= 4, 3x + y <= 6 -> optimum at (1.6, 1.2)
    SdpProblem p;
    p.objective = (Eigen::VectorXd(2) << -1.0, -1.0).finished();
    auto one = [](double v) { return Eigen::MatrixXd::Constant(1, 1, v); };
    p.blocks.push_back(block(one(0), {one(1), one(0)}));
    p.blocks.push_back(block(one(0), {one(0), one(1)}));
    p.blocks.push_back(block(one(4), {one(-1), one(-2)}));
    p.blocks.push_back(block(one(6), {one(-3), one(-1)}));
    const auto s = solve_sdp(p);
    REQUIRE(s.optimal());
    CHECK(s.x(0) == doctest::Approx(1.6).epsilon(1e-6));
    CHECK(s.x(1) == doctest::Approx(1.2).epsilon(1e-6));
    CHECK(s.objective == doctest::Approx(-2.8).epsilon(1e-7));
}

TEST_CASE("SDP: infeasible problem is detected") {
    SdpProblem p;
    p.objective = Eigen::VectorXd::Ones(1);
    auto one = [](double v) { return Eigen::MatrixXd::Constant(1, 1, v); };
    p.blocks.push_back(block(one(-1), {one(1)}));  // x >= 1
    p.blocks.push_back(block(one(0), {one(-1)}));  // x <= 0
    CHECK(solve_sdp(p).outcome == SolverOutcome::Infeasible);
}

TEST_CASE("SDP: starting point already feasible skips phase 1") {
    SdpProblem p;
    p.objective = Eigen::VectorXd::Ones(1);
    p.blocks.push_back(block(Eigen::MatrixXd::Constant(1, 1, -2.0), {Eigen::MatrixXd::Constant(1, 1, 1.0)}));
    p.blocks.push_back(block(Eigen::MatrixXd::Constant(1, 1, 10.0), {Eigen::MatrixXd::Constant(1, 1, -1.0)}));
    SdpOptions opt;
    opt.initial_point = Eigen::VectorXd::Constant(1, 5.0);
    const auto s = solve_sdp(p, opt);
    REQUIRE(s.optimal());
    CHECK(s.x(0) == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("SDP validation and eigenvalue residual") {
    SdpProblem p;
    p.objective = Eigen::VectorXd::Ones(1);
    Eigen::MatrixXd c(2, 2);
    c << 0, 1, 0, 0;
    p.blocks.push_back(block(c, {Eigen::MatrixXd::Identity(2, 2)}));
    CHECK_THROWS_AS(solve_sdp(p), std::invalid_argument);
    CHECK_THROWS_AS(min_eig_residual(c), std::invalid_argument);
    Eigen::MatrixXd s(2, 2);
    s << 2, 1, 1, 2;
    CHECK(min_eig_residual(s) == doctest::Approx(1.0));
}
