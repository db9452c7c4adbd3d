#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace oracle {

std::vector<double> poly_mul(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.empty() || b.empty()) return {};
    std::vector<double> out(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
    }
    return out;
}

std::vector<double> pulse_response(const quantshape::StateSpace& s, std::size_t samples) {
    std::vector<double> out;
    Vector              x = Vector::Zero(s.order());
    for (std::size_t k = 0; k < samples; ++k) {
        const double u = k == 0 ? 1.0 : 0.0;
        out.push_back((s.order() ? s.C().dot(x) : 0.0) + s.D() * u);
        if (s.order()) x = s.A() * x + s.B() * u;
    }
    return out;
}

double vertex_enumeration(const quantshape::LpProblem& lp, bool* feasible) {
    const auto n = lp.num_vars();
    // every constraint as a hyperplane g'x = h
    std::vector<Vector> g;
    std::vector<double> h;
    for (const auto& c : lp.constraints) {
        g.push_back(c.coeffs);
        h.push_back(c.rhs);
    }
    for (Eigen::Index j = 0; j < n; ++j) {
        for (double bound : {lp.lower(j), lp.upper(j)}) {
            if (!std::isfinite(bound)) continue;
            g.push_back(Vector::Unit(n, j));
            h.push_back(bound);
        }
    }
    const std::size_t m = g.size();
    double            best = std::numeric_limits<double>::infinity();
    std::vector<bool> pick(m, false);
    std::fill(pick.begin(), pick.begin() + n, true);
    do {
        Matrix       a(n, n);
        Vector       rhs(n);
        Eigen::Index r = 0;
        for (std::size_t i = 0; i < m; ++i) {
            if (!pick[i]) continue;
            a.row(r) = g[i].transpose();
            rhs(r) = h[i];
            ++r;
        }
        Eigen::FullPivLU<Matrix> lu(a);
        if (lu.rank() < n) continue;
        const Vector x = lu.solve(rhs);
        if (lp.max_violation(x) > 1e-9) continue;
        best = std::min(best, lp.objective.dot(x));
    } while (std::prev_permutation(pick.begin(), pick.end()));
    if (feasible) *feasible = std::isfinite(best);
    return best;
}

SmallLp random_small_lp(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_real_distribution<double> pos(0.0, 0.5);
    SmallLp                                out;
    auto&                                  lp = out.problem;
    Vector                                 x0(5);
    for (int j = 0; j < 5; ++j) {
        lp.lower(j) = -1.0 - pos(rng);
        lp.upper(j) = 1.0 + pos(rng);
        lp.objective(j) = u(rng);
        x0(j) = 0.5 * u(rng);
    }
    for (int i = 0; i < 8; ++i) {
        Vector a(5);
        for (int j = 0; j < 5; ++j) a(j) = u(rng);
        const bool ge = u(rng) < -0.4;
        const double slack = pos(rng);
        lp.add_constraint(a, ge ? quantshape::Relation::GreaterEqual : quantshape::Relation::LessEqual,
                          a.dot(x0) + (ge ? -slack : slack));
    }
    out.optimum = vertex_enumeration(lp, &out.feasible);
    return out;
}

quantshape::StateSpace random_second_order(std::mt19937_64& rng, double rho_max) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double                                 a1 = 0.0, a2 = 0.0;  // z^2 + a1 z + a2
    if (unit(rng) < 0.5) {
        const double p1 = rho_max * u(rng), p2 = rho_max * u(rng);
        a1 = -(p1 + p2);
        a2 = p1 * p2;
    } else {
        const double r = rho_max * std::sqrt(unit(rng)), th = 3.14159 * unit(rng);
        a1 = -2.0 * r * std::cos(th);
        a2 = r * r;
    }
    Matrix a(2, 2);
    a << 0.0, 1.0, -a2, -a1;
    Vector b(2);
    b << 0.0, 1.0;
    quantshape::RowVector c(2);
    c << u(rng), u(rng);
    return quantshape::StateSpace(a, b, c, unit(rng) < 0.5 ? 0.0 : 0.5 * u(rng));
}

double fir2_objective(const std::vector<double>& h, double c, double r1, double r2) {
    const auto f = poly_mul({1.0, r1, r2}, h);
    double     s = 0.0;
    for (double v : f) s += std::abs(v);
    return c * s + std::abs(r1) + std::abs(r2);
}

GridResult fir2_grid_search(const quantshape::StateSpace& hs, double c, double half_width, std::size_t points,
                            std::size_t samples) {
    const auto h = pulse_response(hs, samples);
    GridResult best{std::numeric_limits<double>::infinity(), 0.0, 0.0};
    const double step = 2.0 * half_width / static_cast<double>(points - 1);
    for (std::size_t i = 0; i < points; ++i) {
        const double r1 = -half_width + step * static_cast<double>(i);
        for (std::size_t j = 0; j < points; ++j) {
            const double r2 = -half_width + step * static_cast<double>(j);
            const double v = fir2_objective(h, c, r1, r2);
            if (v < best.value) best = {v, r1, r2};
        }
    }
    return best;
}

double superposition_residual(const quantshape::StateSpace& h, const quantshape::SimTrace& trace) {
    // direct convolution with the pulse response, independent of the state recursion
    const auto          g = pulse_response(h, trace.records.size());
    double              worst = 0.0;
    for (std::size_t k = 0; k < trace.records.size(); ++k) {
        double acc = 0.0;
        for (std::size_t j = 0; j <= k; ++j) {
            const auto& r = trace.records[k - j];
            acc += g[j] * (r.v - r.y);
        }
        worst = std::max(worst, std::abs(acc - trace.records[k].eps));
    }
    return worst;
}

double scalar_lqr_gain(double a, double b, double q, double r) {
    const double qa = b * b;
    const double qb = r * (1.0 - a * a) - q * b * b;
    const double qc = -q * r;
    const double p = (-qb + std::sqrt(qb * qb - 4.0 * qa * qc)) / (2.0 * qa);
    return -(a * b * p) / (r + b * b * p);
}

Matrix companion_from_roots(const std::vector<double>& re, const std::vector<double>& im) {
    std::vector<double> poly{1.0};
    for (std::size_t i = 0; i < re.size(); ++i) {
        if (im[i] == 0.0) {
            poly = poly_mul(poly, {1.0, -re[i]});
        } else if (im[i] > 0.0) {
            poly = poly_mul(poly, {1.0, -2.0 * re[i], re[i] * re[i] + im[i] * im[i]});
        }
    }
    const auto n = static_cast<Eigen::Index>(poly.size() - 1);
    Matrix     a = Matrix::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) a(0, j) = -poly[static_cast<std::size_t>(j + 1)];
    for (Eigen::Index i = 1; i < n; ++i) a(i, i - 1) = 1.0;
    return a;
}

LmiN1 lmi_n1_blocks(double a, double b, double c, double d, double alpha, const Vector& x) {
    const double pf = x(0), pg = x(1), wf = x(2), wg = x(3), l = x(4), me = x(5), mh = x(6);
    const double g = 1.0 - alpha;
    LmiN1        h;
    h.inv.resize(5, 5);
    h.inv << g * pf, g, 0, a * pf + b * wf, l,  //
        g, g * pg, 0, a, pg * a,                //
        0, 0, alpha, b, wg,                     //
        a * pf + b * wf, a, b, pf, 1,           //
        l, pg * a, wg, 1, pg;
    h.eps.resize(3, 3);
    h.eps << pf, 1, c * pf + d * wf, 1, pg, c, c * pf + d * wf, c, me;
    h.eta.resize(3, 3);
    h.eta << pf, 1, wf, 1, pg, 0, wf, 0, mh;
    return h;
}

}  // namespace oracle
