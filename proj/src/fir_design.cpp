#include "quantshape/fir_design.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <string>
#include <thread>

namespace quantshape {

namespace {

// Columns of the map r -> f - h, f = conv([1 r], h), over k = 0..len(h)+n-1.
Eigen::MatrixXd shift_matrix(std::span<const double> h, std::size_t order) {
    const auto rows = static_cast<Eigen::Index>(h.size() + order);
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(rows, static_cast<Eigen::Index>(order));
    for (std::size_t j = 1; j <= order; ++j) {
        for (std::size_t k = 0; k < h.size(); ++k) {
            t(static_cast<Eigen::Index>(k + j), static_cast<Eigen::Index>(j - 1)) = h[k];
        }
    }
    return t;
}

Eigen::VectorXd padded(std::span<const double> h, std::size_t order) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(h.size() + order));
    for (std::size_t k = 0; k < h.size(); ++k) v(static_cast<Eigen::Index>(k)) = h[k];
    return v;
}

// Taps from the dual LP: r_j = y(<= row j) + y(>= row j).
FirFilter taps_from_duals(const SolveStatus& s, std::size_t order) {
    std::vector<double> taps(order);
    for (std::size_t j = 0; j < order; ++j) {
        taps[j] = s.duals(static_cast<Eigen::Index>(2 * j)) + s.duals(static_cast<Eigen::Index>(2 * j + 1));
    }
    return FirFilter(std::move(taps));
}

/**
 * Dual of   min  w_f ||h + T r||_1 + w_r ||r||_1            (cap unset)
 *      or   min  ||h + T r||_1  s.t. ||r||_1 <= cap          (cap set)
 *
 * Variables lambda (one per impulse sample, |lambda_k| <= w_f) plus nu >= 0
 * in the capped form; two rows per tap bound |(T' lambda)_j| by w_r or nu.
 * The row sensitivities reproduce the optimal taps.
 */
LpProblem dual_design_lp(const Eigen::MatrixXd& t, const Eigen::VectorXd& h, double weight_f,
                         std::optional<double> cap) {
    const Eigen::Index k = t.rows();
    const Eigen::Index n = t.cols();
    const Eigen::Index vars = k + (cap ? 1 : 0);
    LpProblem lp(vars);
    lp.objective.head(k) = -h;
    lp.lower.head(k).setConstant(-weight_f);
    lp.upper.head(k).setConstant(weight_f);
    if (cap) {
        lp.objective(k) = *cap;
        lp.lower(k) = 0.0;
        lp.upper(k) = kInf;
    }
    for (Eigen::Index j = 0; j < n; ++j) {
        Eigen::VectorXd row = Eigen::VectorXd::Zero(vars);
        row.head(k) = t.col(j);
        if (cap) {
            row(k) = -1.0;
            lp.add_constraint(row, Relation::LessEqual, 0.0);
            row(k) = 1.0;
            lp.add_constraint(row, Relation::GreaterEqual, 0.0);
        } else {
            lp.add_constraint(row, Relation::LessEqual, 1.0);
            lp.add_constraint(row, Relation::GreaterEqual, -1.0);
        }
    }
    return lp;
}

DesignReport finish_report(const DesignSpec& spec, FirFilter filter, SolveStatus status, std::size_t m) {
    DesignReport rep;
    rep.filter = std::move(filter);
    rep.truncation = m;
    rep.lp_status = std::move(status);
    rep.hr_norm = l1_norm(series(spec.plant, fir_realization(rep.filter)), spec.tail_tol).value;
    rep.r1_norm = rep.filter.feedback_norm();
    rep.objective = spec.c() * rep.hr_norm + rep.r1_norm;
    rep.interval = 2.0 * spec.gamma_eps / rep.hr_norm;
    rep.min_bits = bits_for(rep.objective);
    return rep;
}

DesignReport solve_design(const DesignSpec& spec, std::optional<double> cap) {
    spec.validate();
    const std::size_t   m = truncation_for(spec);
    const auto          h = impulse_response(spec.plant, m);
    const auto          t = shift_matrix(h, spec.filter_order);
    const auto          hv = padded(h, spec.filter_order);
    const LpProblem     lp = dual_design_lp(t, hv, cap ? 1.0 : spec.c(), cap);
    SolveStatus         status = solve_lp(lp);
    if (!status.optimal()) {
        throw std::runtime_error("FIR design LP did not reach optimality: " + to_string(status.outcome));
    }
    FirFilter filter = taps_from_duals(status, spec.filter_order);
    return finish_report(spec, std::move(filter), std::move(status), m);
}

}  // namespace

void DesignSpec::validate() const {
    if (filter_order < 1) throw std::invalid_argument("DesignSpec: filter order must be at least 1");
    if (!(gamma_eps > 0.0) || !std::isfinite(gamma_eps)) throw std::invalid_argument("DesignSpec: gamma_eps must be > 0");
    if (!(l_y > 0.0) || !std::isfinite(l_y)) throw std::invalid_argument("DesignSpec: L_y must be > 0");
    if (truncation && *truncation < filter_order) {
        throw std::invalid_argument("DesignSpec: truncation must be at least the filter order");
    }
    if (!plant.is_stable()) throw std::domain_error("DesignSpec: plant H[z] is not stable");
}

int bits_for(double value) {
    if (!std::isfinite(value) || value < 0.0) throw std::invalid_argument("bits_for: value must be finite and >= 0");
    int b = 1;
    while (std::ldexp(1.0, b) < value) ++b;
    return b;
}

std::size_t truncation_for(const DesignSpec& spec) {
    if (spec.truncation) return *spec.truncation;
    return std::max(l1_norm(spec.plant, spec.tail_tol).samples, spec.filter_order);
}

LpProblem primal_design_lp(std::span<const double> h, std::size_t order, double c) {
    const auto t = shift_matrix(h, order);
    const auto hv = padded(h, order);
    const Eigen::Index k = t.rows();
    const Eigen::Index n = t.cols();
    // [r (n) | fbar (k) | rbar (n) | gamma_eps | gamma_eta]
    const Eigen::Index vars = 2 * n + k + 2;
    const Eigen::Index ge = 2 * n + k;
    const Eigen::Index gh = ge + 1;
    LpProblem lp(vars);
    lp.lower.head(n).setConstant(-kInf);
    lp.objective(ge) = c;
    lp.objective(gh) = 1.0;

    for (Eigen::Index row = 0; row < k; ++row) {
        Eigen::VectorXd a = Eigen::VectorXd::Zero(vars);
        a.head(n) = t.row(row).transpose();
        a(n + row) = -1.0;
        lp.add_constraint(a, Relation::LessEqual, -hv(row));
        a.head(n) = -t.row(row).transpose();
        lp.add_constraint(a, Relation::LessEqual, hv(row));
    }
    for (Eigen::Index j = 0; j < n; ++j) {
        Eigen::VectorXd a = Eigen::VectorXd::Zero(vars);
        a(j) = 1.0;
        a(n + k + j) = -1.0;
        lp.add_constraint(a, Relation::LessEqual, 0.0);
        a(j) = -1.0;
        lp.add_constraint(a, Relation::LessEqual, 0.0);
    }
    Eigen::VectorXd sum_f = Eigen::VectorXd::Zero(vars);
    sum_f.segment(n, k).setOnes();
    sum_f(ge) = -1.0;
    lp.add_constraint(sum_f, Relation::LessEqual, 0.0);
    Eigen::VectorXd sum_r = Eigen::VectorXd::Zero(vars);
    sum_r.segment(n + k, n).setOnes();
    sum_r(gh) = -1.0;
    lp.add_constraint(sum_r, Relation::LessEqual, 0.0);
    return lp;
}

FirFilter solve_primal_design(std::span<const double> h, std::size_t order, double c, SolveStatus* status) {
    const auto lp = primal_design_lp(h, order, c);
    auto       s = solve_lp(lp);
    if (!s.optimal()) throw std::runtime_error("primal design LP failed: " + to_string(s.outcome));
    std::vector<double> taps(s.x.data(), s.x.data() + order);
    if (status) *status = std::move(s);
    return FirFilter(std::move(taps));
}

DesignReport design_min_bits(const DesignSpec& spec) { return solve_design(spec, std::nullopt); }

int static_quantizer_bits(const DesignSpec& spec) {
    if (!spec.plant.is_stable()) throw std::domain_error("static_quantizer_bits: plant is not stable");
    return bits_for(spec.c() * l1_norm(spec.plant, spec.tail_tol).value);
}

DesignReport design_min_error(const DesignSpec& spec, double gamma_eta_cap) {
    if (!(gamma_eta_cap >= 0.0) || !std::isfinite(gamma_eta_cap)) {
        throw std::invalid_argument("design_min_error: cap must be finite and >= 0");
    }
    return solve_design(spec, gamma_eta_cap);
}

std::vector<BitBound> per_bit_bounds(std::span<const TradeoffPoint> points, double l_y, int min_bits, int max_bits) {
    std::vector<BitBound> out;
    for (int b = min_bits; b <= max_bits; ++b) {
        BitBound     bb;
        bb.bits = b;
        const double levels = std::ldexp(1.0, b);
        for (std::size_t i = 0; i < points.size(); ++i) {
            const auto& p = points[i];
            if (!p.ok || !(p.r1_norm < levels)) continue;
            const double bound = l_y * p.hr_norm / (levels - p.r1_norm);
            if (bound < bb.eps_bound) {
                bb.eps_bound = bound;
                bb.point = static_cast<int>(i);
            }
        }
        out.push_back(bb);
    }
    return out;
}

TradeoffCurve tradeoff_sweep(const DesignSpec& spec, std::span<const double> caps, int min_bits, int max_bits,
                             unsigned threads) {
    spec.validate();
    if (min_bits < 1 || max_bits < min_bits) throw std::invalid_argument("tradeoff_sweep: invalid bit range");
    if (!std::is_sorted(caps.begin(), caps.end())) throw std::invalid_argument("tradeoff_sweep: caps must be sorted");
    if (!caps.empty() && (caps.front() < 0.0 || !(caps.back() < std::ldexp(1.0, max_bits)))) {
        throw std::invalid_argument("tradeoff_sweep: caps must lie in [0, 2^max_bits)");
    }

    TradeoffCurve curve;
    curve.points.resize(caps.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < caps.size(); i = next++) {
            TradeoffPoint& p = curve.points[i];
            p.cap = caps[i];
            try {
                auto rep = design_min_error(spec, caps[i]);
                p.hr_norm = rep.hr_norm;
                p.r1_norm = rep.r1_norm;
                p.objective = rep.objective;
                p.filter = std::move(rep.filter);
                p.ok = true;
            } catch (const std::exception&) {
                p.ok = false;
            }
        }
    };
    const unsigned workers = std::clamp<unsigned>(threads, 1, static_cast<unsigned>(std::max<std::size_t>(1, caps.size())));
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    curve.per_bit = per_bit_bounds(curve.points, spec.l_y, min_bits, max_bits);
    return curve;
}

std::vector<double> default_cap_grid(int max_bits, std::size_t count) {
    if (count < 2) throw std::invalid_argument("default_cap_grid: need at least two points");
    const double hi = std::ldexp(1.0, max_bits) * (1.0 - 1e-3);
    const double lo = 1e-3;
    std::vector<double> caps{0.0};
    for (std::size_t i = 0; i < count; ++i) {
        const double f = static_cast<double>(i) / static_cast<double>(count - 1);
        caps.push_back(lo * std::pow(hi / lo, f));
    }
    return caps;
}

}  // namespace quantshape
