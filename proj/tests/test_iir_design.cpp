#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "quantshape/iir_design.hpp"
#include "quantshape/quantsim.hpp"

using namespace quantshape;

namespace {

StateSpace small_plant() {
    Matrix a(2, 2);
    a << 0.0, 1.0, -0.4, 1.0;
    Vector b(2);
    b << 0.0, 1.0;
    RowVector c(2);
    c << 0.3, 1.0;
    return StateSpace(a, b, c, 0.0);
}

DesignSpec small_spec(const StateSpace& plant = small_plant()) {
    DesignSpec s;
    s.plant = plant;
    s.l_y = 1.0;
    s.gamma_eps = 0.5;
    return s;
}

// Minimal mu for an invariant ellipsoid {x' P x <= 1} of H alone.
double plant_only_bound(const StateSpace& h, double alpha) {
    const Eigen::Index n = h.order();
    const Eigen::Index sym = n * (n + 1) / 2;
    auto               blocks = [&](const Vector& x) {
        Matrix       p(n, n);
        Eigen::Index k = 0;
        for (Eigen::Index j = 0; j < n; ++j) {
            for (Eigen::Index i = 0; i <= j; ++i, ++k) p(i, j) = p(j, i) = x(k);
        }
        Matrix inv = Matrix::Zero(2 * n + 1, 2 * n + 1);
        inv.topLeftCorner(n, n) = (1 - alpha) * p;
        inv(n, n) = alpha;
        inv.block(0, n + 1, n, n) = h.A().transpose() * p;
        inv.block(n, n + 1, 1, n) = h.B().transpose() * p;
        inv.block(n + 1, 0, n, n) = p * h.A();
        inv.block(n + 1, n, n, 1) = p * h.B();
        inv.bottomRightCorner(n, n) = p;
        Matrix out(n + 1, n + 1);
        out.topLeftCorner(n, n) = p;
        out.topRightCorner(n, 1) = h.C().transpose();
        out.bottomLeftCorner(1, n) = h.C();
        out(n, n) = x(sym);
        return std::vector<Matrix>{inv, out};
    };
    SdpProblem sdp;
    sdp.objective = Vector::Unit(sym + 1, sym);
    const auto base = blocks(Vector::Zero(sym + 1));
    for (const auto& m : base) sdp.blocks.push_back({m, {}});
    for (Eigen::Index i = 0; i <= sym; ++i) {
        const auto v = blocks(Vector::Unit(sym + 1, i));
        for (std::size_t b = 0; b < v.size(); ++b) sdp.blocks[b].coeffs.push_back(v[b] - base[b]);
    }
    const auto s = solve_sdp(sdp);
    REQUIRE(s.optimal());
    return s.objective;
}

}  // namespace

TEST_CASE("n = 1 LMI assembly matches the hand expansion coefficient by coefficient") {
    const double a = 0.6, b = -1.3, c = 0.7, d = 0.25, alpha = 0.3;
    Matrix       am(1, 1);
    am << a;
    const StateSpace plant(am, Vector::Constant(1, b), RowVector::Constant(1, c), d);
    const auto       sdp = assemble_lmis(plant, alpha);
    REQUIRE(sdp.num_vars() == 7);
    REQUIRE(sdp.blocks.size() == 3);
    CHECK(sdp.objective == Vector::Unit(7, 5));

    const auto h0 = oracle::lmi_n1_blocks(a, b, c, d, alpha, Vector::Zero(7));
    CHECK(sdp.blocks[0].constant == h0.inv);
    CHECK(sdp.blocks[1].constant == h0.eps);
    CHECK(sdp.blocks[2].constant == h0.eta);
    for (Eigen::Index i = 0; i < 7; ++i) {
        const auto hi = oracle::lmi_n1_blocks(a, b, c, d, alpha, Vector::Unit(7, i));
        INFO("variable " << i);
        CHECK((sdp.blocks[0].coeffs[static_cast<std::size_t>(i)] - (hi.inv - h0.inv)).cwiseAbs().maxCoeff() == 0.0);
        CHECK((sdp.blocks[1].coeffs[static_cast<std::size_t>(i)] - (hi.eps - h0.eps)).cwiseAbs().maxCoeff() == 0.0);
        CHECK((sdp.blocks[2].coeffs[static_cast<std::size_t>(i)] - (hi.eta - h0.eta)).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("LMI blocks are affine in the decision variables") {
    std::mt19937_64                        rng(4);
    std::normal_distribution<double>       nd;
    const auto                             plant = small_plant();
    const LmiLayout                        layout{plant.order(), true};
    const auto                             sdp = assemble_lmis(plant, 0.2);
    for (int trial = 0; trial < 5; ++trial) {
        Vector x1(layout.num_vars()), x2(layout.num_vars());
        for (Eigen::Index i = 0; i < x1.size(); ++i) x1(i) = nd(rng), x2(i) = nd(rng);
        const auto b1 = lmi_blocks(plant, layout.unpack(x1), 0.2);
        const auto b2 = lmi_blocks(plant, layout.unpack(x2), 0.2);
        const auto b0 = lmi_blocks(plant, layout.unpack(Vector::Zero(x1.size())), 0.2);
        const auto b12 = lmi_blocks(plant, layout.unpack(x1 + x2), 0.2);
        CHECK((b1.invariance + b2.invariance - b0.invariance - b12.invariance).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((b1.eps + b2.eps - b0.eps - b12.eps).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((b1.eta + b2.eta - b0.eta - b12.eta).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((sdp.blocks[0].evaluate(x1) - b1.invariance).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((sdp.blocks[1].evaluate(x1) - b1.eps).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("identity Lyapunov variables give the plain output block") {
    const auto   plant = small_plant();
    auto         v = LmiVariables::zero(2);
    v.P_f = Matrix::Identity(2, 2);
    v.P_g = Matrix::Identity(2, 2);
    v.W_g = plant.B();
    v.mu_eps = 3.0;
    const auto blocks = lmi_blocks(plant, v, 0.1);
    Matrix     expect(5, 5);
    expect << 1, 0, 1, 0, 0.3,  //
        0, 1, 0, 1, 1.0,        //
        1, 0, 1, 0, 0.3,        //
        0, 1, 0, 1, 1.0,        //
        0.3, 1.0, 0.3, 1.0, 3.0;
    CHECK((blocks.eps - expect).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("layout pack and unpack are inverse") {
    std::mt19937_64                  rng(9);
    std::normal_distribution<double> nd;
    for (bool mu_eta : {true, false}) {
        const LmiLayout layout{3, mu_eta};
        Vector          x(layout.num_vars());
        for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = nd(rng);
        const auto v = layout.unpack(x, 7.0);
        CHECK(layout.pack(v) == x);
        CHECK(v.P_f == v.P_f.transpose());
        if (!mu_eta) CHECK(v.mu_eta == 7.0);
    }
    const LmiLayout small{2, true};
    CHECK_THROWS_AS(small.unpack(Vector::Zero(3)), std::invalid_argument);
}

TEST_CASE("solved design: certificate, change of variables and recovered filter") {
    const auto   spec = small_spec();
    const double alpha = 0.5 * alpha_upper(spec.plant);
    const auto   rep = solve_fixed_alpha(spec, alpha, 1.5);
    const auto&  v = rep.vars;
    const auto&  h = spec.plant;
    const auto&  r = rep.realization;
    const Eigen::Index n = 2;

    CHECK(rep.certificate_residual() >= -1e-8);
    CHECK(r.is_stable());
    CHECK(r.D() == 1.0);
    CHECK(rep.mu_eta == doctest::Approx(1.5));
    CHECK(rep.true_r1_norm >= 0.0);
    CHECK(rep.objective == doctest::Approx(spec.c() * rep.true_hr_norm + rep.true_r1_norm));

    // Rebuild the augmented system (plant state first) and the transformation.
    const Matrix pg_inv = v.P_g.inverse();
    const Matrix s_f = v.P_f - pg_inv;
    Matrix       big_a(2 * n, 2 * n);
    big_a << h.A(), h.B() * r.C(), Matrix::Zero(n, n), r.A();
    Vector big_b(2 * n);
    big_b << h.B(), r.B();
    RowVector big_c(2 * n);
    big_c << h.C(), h.D() * r.C();
    Matrix big_p(2 * n, 2 * n);
    big_p << v.P_g, -v.P_g, -v.P_g, s_f.inverse() + v.P_g;
    Matrix u(2 * n, 2 * n);
    u << v.P_f, Matrix::Identity(n, n), s_f, Matrix::Zero(n, n);

    Matrix mp(2 * n, 2 * n);
    mp << v.P_f, Matrix::Identity(n, n), Matrix::Identity(n, n), v.P_g;
    Matrix ma(2 * n, 2 * n);
    ma << h.A() * v.P_f + h.B() * v.W_f, h.A(), v.L_mat, v.P_g * h.A();
    Vector mb(2 * n);
    mb << h.B(), v.W_g;
    RowVector mc(2 * n);
    mc << h.C() * v.P_f + h.D() * v.W_f, h.C();

    auto rel = [](const Matrix& x, const Matrix& y) { return (x - y).norm() / std::max(1.0, y.norm()); };
    CHECK(rel(u.transpose() * big_p * u, mp) < 1e-6);
    CHECK(rel(u.transpose() * big_p * big_a * u, ma) < 1e-6);
    CHECK(rel(u.transpose() * big_p * big_b, mb) < 1e-6);
    CHECK(rel(big_c * u, mc) < 1e-6);

    // The ellipsoid x' P x <= 1 traps the state for |w| <= 1.
    std::mt19937_64                        rng(17);
    std::uniform_int_distribution<int>     coin(0, 1);
    Vector                                 x = Vector::Zero(2 * n);
    double                                 worst = 0.0;
    double                                 worst_eps = 0.0;
    for (int k = 0; k < 10000; ++k) {
        const double w = coin(rng) ? 1.0 : -1.0;
        worst_eps = std::max(worst_eps, std::abs(big_c.dot(x) + h.D() * w));
        x = big_a * x + big_b * w;
        worst = std::max(worst, x.dot(big_p * x));
    }
    CHECK(worst <= 1.0 + 1e-6);
    const auto bounds = ellipsoid_error_bounds(rep, 2.0);
    CHECK(worst_eps <= bounds.eps_bound + 1e-9);
}

TEST_CASE("ellipsoid bounds dominate simulated errors for the round-off scale d") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 3; ++trial) {
        const auto plant = oracle::random_second_order(rng, 0.8);
        const auto spec = small_spec(plant);
        const auto rep = solve_fixed_alpha(spec, 0.5 * alpha_upper(plant), 2.0);
        const double d = 0.3;
        const auto   bounds = ellipsoid_error_bounds(rep, d);
        if (plant.D() == 0.0) CHECK(bounds.eps_bound == doctest::Approx(0.5 * d * std::sqrt(rep.mu_eps)));

        const auto hr = series(plant, rep.realization, SeriesOrder::PlantFirst);
        const auto r1 = rep.realization.with_feedthrough(0.0);
        std::uniform_real_distribution<double> u(-0.5 * d, 0.5 * d);
        std::vector<double>                    w(20000);
        for (auto& x : w) x = u(rng) < 0 ? -0.5 * d : 0.5 * d;
        double max_eps = 0.0, max_eta = 0.0;
        for (double e : simulate(hr, w)) max_eps = std::max(max_eps, std::abs(e));
        for (double e : simulate(r1, w)) max_eta = std::max(max_eta, std::abs(e));
        CHECK(max_eps <= bounds.eps_bound + 1e-12);
        CHECK(max_eps <= 0.5 * d * rep.true_hr_norm + 1e-12);
        CHECK(max_eta <= bounds.eta_bound + 1e-12);
        CHECK(max_eta <= 0.5 * d * rep.true_r1_norm + 1e-12);
    }
}

TEST_CASE("a tiny cap forces R close to 1 and the plant-only invariant bound") {
    const auto   spec = small_spec();
    const double alpha = 0.5 * alpha_upper(spec.plant);
    const auto   rep = solve_fixed_alpha(spec, alpha, 1e-6);
    const double mu_h = plant_only_bound(spec.plant, alpha);
    CHECK(rep.true_r1_norm < 1e-2);
    CHECK(rep.mu_eps <= mu_h * (1.0 + 1e-6));
    CHECK(rep.mu_eps >= mu_h * (1.0 - 1e-2));
}

TEST_CASE("tightening the cap never decreases mu_eps") {
    const auto   spec = small_spec();
    const double alpha = 0.4 * alpha_upper(spec.plant);
    double       previous = 0.0;
    for (double cap : {8.0, 2.0, 0.5, 0.1}) {
        const auto rep = solve_fixed_alpha(spec, alpha, cap);
        CHECK(rep.mu_eps >= previous * (1.0 - 1e-6));
        previous = rep.mu_eps;
    }
}

TEST_CASE("line search: single point, nested grids and bad inputs") {
    const auto spec = small_spec();
    const auto fine = alpha_grid(spec.plant, 64);
    REQUIRE(fine.size() == 64);
    CHECK(fine.back() < alpha_upper(spec.plant));

    const std::vector<double> one{fine[20]};
    const auto                single = line_search_alpha(spec, one, 2.0);
    const auto                direct = solve_fixed_alpha(spec, fine[20], 2.0);
    CHECK(single.mu_eps == direct.mu_eps);
    CHECK(single.alpha_star == fine[20]);

    std::vector<double> coarse;
    for (std::size_t i = 7; i < fine.size(); i += 8) coarse.push_back(fine[i]);
    REQUIRE(coarse.size() == 8);
    const auto best_fine = line_search_alpha(spec, fine, 2.0, AlphaCriterion::MuEps, 2);
    const auto best_coarse = line_search_alpha(spec, coarse, 2.0);
    CHECK(best_fine.mu_eps <= best_coarse.mu_eps + 1e-12);

    CHECK_THROWS_AS(line_search_alpha(spec, std::size_t{1}, 2.0), std::invalid_argument);
    const std::vector<double> outside{alpha_upper(spec.plant) * 1.5, 0.999};
    CHECK_THROWS_AS(line_search_alpha(spec, outside, 2.0), std::invalid_argument);
    CHECK_THROWS_AS(solve_fixed_alpha(spec, 0.0, 2.0), std::invalid_argument);
    CHECK_THROWS_AS(solve_fixed_alpha(spec, 0.1, -1.0), std::invalid_argument);
}

TEST_CASE("uncapped design reports the certified mu_eta") {
    const auto spec = small_spec();
    const auto rep = solve_fixed_alpha(spec, 0.3 * alpha_upper(spec.plant), std::nullopt);
    CHECK_FALSE(rep.mu_eta_cap.has_value());
    CHECK(rep.certificate[2] >= -1e-8);
    CHECK(rep.certificate[2] <= 1e-6 * std::max(1.0, rep.mu_eta));
    CHECK(rep.bound_objective ==
          doctest::Approx(spec.c() * std::sqrt(rep.mu_eps) + std::sqrt(rep.mu_eta)));
}

TEST_CASE("bit-allocation flow keeps the best post-hoc objective") {
    const auto                               spec = small_spec();
    const std::vector<std::optional<double>> caps{std::nullopt, 0.5, 2.0};
    const auto                               res = design_iir(spec, 6, caps);
    REQUIRE(res.sweep.size() == 3);
    for (const auto& e : res.sweep) {
        if (e.report) CHECK(res.best.objective <= e.report->objective);
    }
    CHECK(default_mu_eta_caps(4).size() == 5);
    CHECK_FALSE(default_mu_eta_caps(4).front().has_value());
}
