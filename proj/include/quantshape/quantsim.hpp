#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "quantshape/statespace.hpp"

namespace quantshape {

/// Mid-rise uniform quantizer with 2^b levels (i + 1/2) d, saturating at +-L.
class QuantizerSpec {
   public:
    /// Builds (b, d, L) with 2L = (2^b - 1) d.
    static QuantizerSpec from_bits(int bits, double interval);

    int    bits() const { return bits_; }
    double interval() const { return interval_; }
    double saturation() const { return saturation_; }
    // Inputs beyond this magnitude overload the quantizer.
    double overload_threshold() const { return saturation_ + 0.5 * interval_; }
    std::size_t levels() const { return std::size_t{1} << bits_; }

   private:
    QuantizerSpec(int bits, double interval);

    int    bits_ = 1;
    double interval_ = 1.0;
    double saturation_ = 0.5;
};

/// Static mid-rise map; outputs are clamped to [-L, L].
double midrise(const QuantizerSpec& spec, double xi);

struct QuantizerStep {
    double v = 0.0;    // quantized output
    double w = 0.0;    // round-off v - xi
    double xi = 0.0;   // static quantizer input y + eta
    double eta = 0.0;  // feedback signal (R - 1) w
    bool   overload = false;
};

/// Static quantizer with round-off fed back through the strictly proper filter R[z] - 1.
class FeedbackQuantizer {
   public:
    FeedbackQuantizer(QuantizerSpec spec, StateSpace feedback);

    /// Error feedback through R[z] - 1 for a monic FIR filter.
    static FeedbackQuantizer with_fir(QuantizerSpec spec, const FirFilter& filter);
    /// R[z] = 1: plain static quantizer.
    static FeedbackQuantizer static_only(QuantizerSpec spec);

    QuantizerStep step(double y);
    void          reset();

    const QuantizerSpec& spec() const { return spec_; }
    const StateSpace&    feedback() const { return feedback_; }

   private:
    QuantizerSpec spec_;
    StateSpace    feedback_;
    Vector        state_;
};

/// Discrete LQR gain K for u = K x, so that A + B K is the closed loop.
RowVector lqr_gain(const Matrix& a, const Vector& b, const Matrix& q, double r, double tol = 1e-12,
                   std::size_t max_iter = 200000);

/// Linearized rotary inverted pendulum under state feedback, tracking a square-wave yaw reference.
struct PendulumBench {
    Matrix    A;
    Vector    B;
    RowVector K;
    RowVector C1;
    double    sample_time = 0.01;
    double    yaw_high = 1.5707963267948966;  // target yaw during the first half of each period
    double    period = 10.0;
    Matrix    q_lqr;
    double    r_lqr = 0.05;

    /// Printed plant matrices, LQR weights and the published gain.
    static PendulumBench preset();

    double yaw_target(double t) const;
    void   validate() const;
};

/// H[z] = C1 (zI - A - BK)^{-1} B K_1: quantization error on phi to phi.
StateSpace closed_loop_H(const PendulumBench& bench);

struct SimRecord {
    double t = 0.0;
    double y = 0.0;
    double xi = 0.0;
    double v = 0.0;
    double w = 0.0;
    double eta = 0.0;
    double eps = 0.0;
    bool   overload = false;
};

struct SimTrace {
    std::vector<SimRecord> records;
    std::size_t            overload_count = 0;
    double                 max_abs_eps = 0.0;
    double                 max_abs_xi = 0.0;
};

/**
 * Twin simulation from zero state: an ideal loop and a loop whose phi
 * measurement passes through the quantizer (nullptr: unquantized) before the
 * controller u = K (x_meas - [0, yaw(t), 0, 0]). eps = phi_quantized - phi_ideal.
 * Steps cover t = k T_s for k T_s < horizon_s.
 */
SimTrace run_benchmark(const PendulumBench& bench, FeedbackQuantizer* quantizer, double horizon_s);

/// True when no step of the trace overloaded the quantizer.
bool verify_no_overload(const SimTrace& trace, const QuantizerSpec& spec);

/// Output of a SISO system driven by u from zero state.
std::vector<double> simulate(const StateSpace& s, const std::vector<double>& u);

}  // namespace quantshape
