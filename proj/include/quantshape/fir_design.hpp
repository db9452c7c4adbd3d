#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "quantshape/solvers.hpp"
#include "quantshape/statespace.hpp"

namespace quantshape {

/// Design problem: plant H[z], filter order, output-error bound and observation bound.
struct DesignSpec {
    StateSpace  plant;
    std::size_t filter_order = 4;
    // Impulse samples of H kept in the LP; nullopt picks the adaptive l1 truncation.
    std::optional<std::size_t> truncation;
    double                     gamma_eps = 0.05;  // bound on ||eps||_inf
    double                     l_y = 1.0;         // bound on ||y||_inf
    double                     tail_tol = 1e-12;

    double c() const { return l_y / gamma_eps; }

    /// Throws std::invalid_argument / std::domain_error on an unusable spec.
    void validate() const;
};

struct DesignReport {
    FirFilter   filter;
    double      hr_norm = 0.0;  // ||H R||, evaluated from the filter
    double      r1_norm = 0.0;  // ||R - 1|| = sum |r_k|
    double      objective = 0.0;
    double      interval = 0.0;  // quantization interval d = 2 gamma_eps / ||H R||
    int         min_bits = 0;
    std::size_t truncation = 0;
    SolveStatus lp_status;
};

struct TradeoffPoint {
    double    cap = 0.0;
    double    hr_norm = 0.0;
    double    r1_norm = 0.0;
    double    objective = 0.0;  // c ||HR|| + ||R-1|| for the point's filter
    FirFilter filter;
    bool      ok = false;
};

struct BitBound {
    int    bits = 0;
    double eps_bound = kInf;  // L_y ||HR|| / (2^b - ||R-1||), minimized over the curve
    int    point = -1;        // index into TradeoffCurve::points, -1 if no admissible point
};

struct TradeoffCurve {
    std::vector<TradeoffPoint> points;
    std::vector<BitBound>      per_bit;
};

/// Smallest b with value <= 2^b (at least one bit).
int bits_for(double value);

/// Truncation length used for a spec: explicit, or the adaptive l1 choice for H.
std::size_t truncation_for(const DesignSpec& spec);

/**
 * The bit-minimizing design LP in its primal form: variables
 * [r_1..r_n, fbar_0..fbar_m, rbar_1..rbar_n, gamma_eps, gamma_eta] with
 * -fbar_k <= f_k <= fbar_k, -rbar_k <= r_k <= rbar_k, sum fbar <= gamma_eps,
 * sum rbar <= gamma_eta, minimizing c gamma_eps + gamma_eta. f = conv([1 r], h).
 * Practical only for short truncations; the designer solves the dual.
 */
LpProblem primal_design_lp(std::span<const double> h, std::size_t order, double c);

/// Solve the primal form directly and return its taps (cross-check route).
FirFilter solve_primal_design(std::span<const double> h, std::size_t order, double c, SolveStatus* status = nullptr);

DesignReport design_min_bits(const DesignSpec& spec);

/// Bits needed by the static quantizer (R = 1): ceil(log2(c ||H||)).
int static_quantizer_bits(const DesignSpec& spec);

/// Minimizes ||HR|| subject to ||R - 1|| <= gamma_eta_cap.
DesignReport design_min_error(const DesignSpec& spec, double gamma_eta_cap);

/// Per-bit error bound over a finished curve.
std::vector<BitBound> per_bit_bounds(std::span<const TradeoffPoint> points, double l_y, int min_bits, int max_bits);

/// Runs design_min_error over caps (parallel, at most `threads` workers) and the per-bit bound.
TradeoffCurve tradeoff_sweep(const DesignSpec& spec, std::span<const double> caps, int min_bits, int max_bits,
                             unsigned threads = 1);

/// 40 log-spaced caps over [1e-3, 2^max_bits - margin], preceded by 0.
std::vector<double> default_cap_grid(int max_bits, std::size_t count = 40);

}  // namespace quantshape
