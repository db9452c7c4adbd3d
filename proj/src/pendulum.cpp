#include <cmath>
#include <stdexcept>
#include <string>

#include "quantshape/quantsim.hpp"

namespace quantshape {

RowVector lqr_gain(const Matrix& a, const Vector& b, const Matrix& q, double r, double tol, std::size_t max_iter) {
    const auto n = a.rows();
    if (a.cols() != n || b.size() != n || q.rows() != n || q.cols() != n) {
        throw std::invalid_argument("lqr_gain: dimension mismatch");
    }
    if (!(r > 0.0)) throw std::invalid_argument("lqr_gain: control weight must be > 0");

    // value iteration on the Riccati map
    Matrix p = q;
    for (std::size_t it = 0; it < max_iter; ++it) {
        const Vector    pb = p * b;
        const double    s = r + b.dot(pb);
        const RowVector bpa = pb.transpose() * a;
        Matrix          next = q + a.transpose() * p * a - bpa.transpose() * bpa / s;
        next = 0.5 * (next + next.transpose());
        const double change = (next - p).cwiseAbs().maxCoeff();
        p = std::move(next);
        if (!p.allFinite()) break;
        if (change <= tol * (1.0 + p.cwiseAbs().maxCoeff())) {
            const Vector pb2 = p * b;
            return -(pb2.transpose() * a) / (r + b.dot(pb2));
        }
    }
    throw std::runtime_error("lqr_gain: Riccati iteration did not converge");
}

PendulumBench PendulumBench::preset() {
    PendulumBench bench;
    bench.A.resize(4, 4);
    bench.A << 1.0056, 0.0, 0.0100, 0.0001,  //
        -0.0003, 1.0000, -0.0000, 0.0100,    //
        1.1134, 0.0, 1.0056, 0.0149,         //
        -0.0653, 0.0, -0.0003, 0.9926;
    bench.B.resize(4);
    bench.B << -0.0004, 0.0002, -0.0864, 0.0431;
    bench.K.resize(4);
    bench.K << 57.2598, 6.0910, 6.2562, 3.4953;
    bench.C1.resize(4);
    bench.C1 << 1.0, 0.0, 0.0, 0.0;
    bench.q_lqr = Eigen::Vector4d(10.0, 2.0, 0.5, 0.0).asDiagonal();
    bench.r_lqr = 0.05;
    return bench;
}

double PendulumBench::yaw_target(double t) const {
    const double phase = std::fmod(t + 1e-9 * sample_time, period);
    return phase < 0.5 * period ? yaw_high : 0.0;
}

void PendulumBench::validate() const {
    const auto n = A.rows();
    if (A.cols() != n || B.size() != n || K.size() != n || C1.size() != n || n < 2) {
        throw std::invalid_argument("PendulumBench: inconsistent dimensions");
    }
    if (!(sample_time > 0.0) || !(period > 0.0)) throw std::invalid_argument("PendulumBench: invalid timing");
    if (spectral_radius(A + B * K) >= 1.0 - kStabilityTol) {
        throw std::domain_error("PendulumBench: closed loop A + BK is not stable");
    }
}

StateSpace closed_loop_H(const PendulumBench& bench) {
    bench.validate();
    return StateSpace(bench.A + bench.B * bench.K, bench.B * bench.K(0), bench.C1, 0.0);
}

SimTrace run_benchmark(const PendulumBench& bench, FeedbackQuantizer* quantizer, double horizon_s) {
    bench.validate();
    if (!(horizon_s >= 0.0) || !std::isfinite(horizon_s)) throw std::invalid_argument("run_benchmark: bad horizon");

    const auto        n = bench.A.rows();
    const std::size_t steps = static_cast<std::size_t>(std::ceil(horizon_s / bench.sample_time - 1e-9));
    SimTrace          trace;
    trace.records.reserve(steps);

    Vector x_ideal = Vector::Zero(n);
    Vector x_quant = Vector::Zero(n);
    Vector target = Vector::Zero(n);
    if (quantizer) quantizer->reset();

    for (std::size_t k = 0; k < steps; ++k) {
        const double t = static_cast<double>(k) * bench.sample_time;
        target(1) = bench.yaw_target(t);

        SimRecord rec;
        rec.t = t;
        rec.y = bench.C1.dot(x_quant);
        Vector measured = x_quant;
        if (quantizer) {
            const auto q = quantizer->step(rec.y);
            rec.xi = q.xi;
            rec.v = q.v;
            rec.w = q.w;
            rec.eta = q.eta;
            rec.overload = q.overload;
            measured(0) = q.v;
        } else {
            rec.xi = rec.y;
            rec.v = rec.y;
        }
        rec.eps = rec.y - bench.C1.dot(x_ideal);

        const double u_ideal = bench.K.dot(x_ideal - target);
        const double u_quant = bench.K.dot(measured - target);
        x_ideal = bench.A * x_ideal + bench.B * u_ideal;
        x_quant = bench.A * x_quant + bench.B * u_quant;
        if (x_quant.norm() > 1e6 || x_ideal.norm() > 1e6 || !x_quant.allFinite()) {
            throw std::runtime_error("run_benchmark: state diverged at t = " + std::to_string(t));
        }

        if (rec.overload) ++trace.overload_count;
        trace.max_abs_eps = std::max(trace.max_abs_eps, std::abs(rec.eps));
        trace.max_abs_xi = std::max(trace.max_abs_xi, std::abs(rec.xi));
        trace.records.push_back(rec);
    }
    return trace;
}

}  // namespace quantshape
